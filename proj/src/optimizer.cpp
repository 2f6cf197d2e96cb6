#include "mrvfuzz/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <thread>

#include "mrvfuzz/engine.hpp"
#include "mrvfuzz/rng.hpp"
#include "mrvfuzz/stimulus.hpp"

namespace mrvfuzz {
namespace {

std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }

std::size_t popcount_and_not(const std::vector<uint64_t>& a, const std::vector<uint64_t>& covered) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(std::popcount(a[i] & ~covered[i]));
  return n;
}

void or_into(std::vector<uint64_t>& dst, const std::vector<uint64_t>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] |= src[i];
}

}  // namespace

ProfileMatrix::ProfileMatrix(std::vector<std::size_t> pairs, std::size_t num_points)
    : pairs_(std::move(pairs)),
      num_points_(num_points),
      rows_(pairs_.size(), std::vector<uint64_t>(words_for(num_points), 0)) {}

ProfileMatrix ProfileMatrix::from_sets(const std::vector<std::vector<uint32_t>>& rows, std::size_t num_points) {
  std::vector<std::size_t> ids(rows.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  ProfileMatrix m(std::move(ids), num_points);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (uint32_t c : rows[r]) {
      if (c >= num_points) throw OptimizerError("set element out of range");
      m.set(r, c);
    }
  }
  return m;
}

std::vector<uint64_t> ProfileMatrix::covered_points() const {
  std::vector<uint64_t> all(words_for(num_points_), 0);
  for (const auto& row : rows_) or_into(all, row);
  return all;
}

bool ProfileMatrix::columns_all_covered() const {
  const auto all = covered_points();
  std::size_t n = 0;
  for (uint64_t w : all) n += static_cast<std::size_t>(std::popcount(w));
  return n == num_points_;
}

ProfileMatrix profile(uint32_t runs_per_pair, uint64_t seed, unsigned lanes, uint64_t max_cycles) {
  const auto manifest = dut_manifest();
  const std::size_t universe = manifest->total_points();

  // Programs are drawn up front from one stream so lanes do not change them.
  Rng rng(seed);
  std::vector<std::vector<Program>> programs(kNumPairs);
  for (isa::Mnemonic i : isa::legal_ops()) {
    for (std::size_t m = 0; m < kNumMutations; ++m) {
      auto& progs = programs[pair_index(i, m)];
      for (uint32_t r = 0; r < runs_per_pair; ++r) {
        std::vector<uint32_t> ti;
        for (std::size_t k = 0; k < kTiCount; ++k) ti.push_back(random_instruction(i, rng));
        Program p = make_program(std::move(ti));
        for (std::size_t k = 0; k < kTiCount; ++k) p = mutate(p, k, static_cast<MutationId>(m), rng);
        progs.push_back(std::move(p));
      }
    }
  }

  std::vector<std::vector<uint64_t>> raw(kNumPairs);
  auto work = [&](std::size_t lane, std::size_t stride) {
    for (std::size_t pair = lane; pair < kNumPairs; pair += stride) {
      cov::CoverageMap acc(manifest);
      for (const Program& p : programs[pair]) acc.merge_from(run_dut(p, BugConfig{}, max_cycles, instruction_budget(p)).coverage);
      raw[pair] = acc.words();
    }
  };
  if (lanes <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned l = 0; l < lanes; ++l) workers.emplace_back(work, l, lanes);
  }

  std::vector<uint64_t> seen(words_for(universe), 0);
  for (const auto& row : raw) or_into(seen, row);
  std::vector<uint32_t> columns;
  for (uint32_t c = 0; c < universe; ++c) {
    if ((seen[c >> 6] >> (c & 63)) & 1u) columns.push_back(c);
  }

  std::vector<std::size_t> pairs(kNumPairs);
  for (std::size_t p = 0; p < kNumPairs; ++p) pairs[p] = p;
  ProfileMatrix m(std::move(pairs), columns.size());
  for (std::size_t p = 0; p < kNumPairs; ++p) {
    for (std::size_t col = 0; col < columns.size(); ++col) {
      const uint32_t c = columns[col];
      if ((raw[p][c >> 6] >> (c & 63)) & 1u) m.set(p, col);
    }
  }
  m.point_ids = columns;
  for (uint32_t c : columns) m.point_labels.push_back(manifest->point_label(c));
  m.meta = {{"runs_per_pair", runs_per_pair},
            {"rng_seed", seed},
            {"bugs", ""},
            {"max_cycles", max_cycles},
            {"manifest_hash", hash_hex(manifest->id())},
            {"universe", universe}};
  return m;
}

std::vector<std::size_t> greedy_cover(const ProfileMatrix& m) {
  const auto target = m.covered_points();
  std::vector<uint64_t> covered(target.size(), 0);
  std::vector<std::size_t> q;
  std::vector<bool> taken(m.num_rows(), false);
  for (;;) {
    std::size_t best = m.num_rows(), best_gain = 0;
    for (std::size_t r = 0; r < m.num_rows(); ++r) {
      if (taken[r]) continue;
      const std::size_t gain = popcount_and_not(m.row_bits(r), covered);
      if (gain > best_gain) {
        best_gain = gain;
        best = r;
      }
    }
    if (best_gain == 0) break;
    taken[best] = true;
    q.push_back(best);
    or_into(covered, m.row_bits(best));
  }
  std::sort(q.begin(), q.end());
  return q;
}

std::vector<std::size_t> exact_cover(const ProfileMatrix& m) {
  const std::size_t n = m.num_rows();
  if (n > kExactCoverMaxRows) throw OptimizerError("exact cover supports at most 20 rows");
  const auto target = m.covered_points();

  // suffix[i] = union of rows i..n-1, for the reachability bound.
  std::vector<std::vector<uint64_t>> suffix(n + 1, std::vector<uint64_t>(target.size(), 0));
  for (std::size_t i = n; i-- > 0;) {
    suffix[i] = suffix[i + 1];
    or_into(suffix[i], m.row_bits(i));
  }
  auto covers = [&](const std::vector<uint64_t>& bits) {
    for (std::size_t w = 0; w < target.size(); ++w) {
      if ((bits[w] & target[w]) != target[w]) return false;
    }
    return true;
  };

  // Iterative deepening over the cardinality; combinations are visited in
  // lexicographic order, so the first cover found at a depth is the answer.
  std::vector<std::size_t> chosen;
  std::function<bool(std::size_t, std::size_t, const std::vector<uint64_t>&)> search =
      [&](std::size_t next, std::size_t left, const std::vector<uint64_t>& covered) -> bool {
    if (covers(covered)) return true;
    if (left == 0 || next >= n) return false;
    std::vector<uint64_t> reach = covered;
    or_into(reach, suffix[next]);
    if (!covers(reach)) return false;
    for (std::size_t r = next; r < n; ++r) {
      std::vector<uint64_t> with = covered;
      or_into(with, m.row_bits(r));
      chosen.push_back(r);
      if (search(r + 1, left - 1, with)) return true;
      chosen.pop_back();
    }
    return false;
  };
  const std::vector<uint64_t> none(target.size(), 0);
  for (std::size_t k = 0; k <= n; ++k) {
    chosen.clear();
    if (search(0, k, none)) return chosen;
  }
  throw OptimizerError("no cover exists");
}

bool is_cover(const ProfileMatrix& m, const std::vector<std::size_t>& q) {
  const auto target = m.covered_points();
  std::vector<uint64_t> covered(target.size(), 0);
  for (std::size_t r : q) {
    if (r >= m.num_rows()) return false;
    or_into(covered, m.row_bits(r));
  }
  for (std::size_t w = 0; w < target.size(); ++w) {
    if ((covered[w] & target[w]) != target[w]) return false;
  }
  return true;
}

WeightTable weights_from(const ProfileMatrix& m, const std::vector<std::size_t>& q) {
  WeightTable t;
  for (std::size_t r : q) t.set(m.pairs().at(r));
  return t;
}

nlohmann::json to_json(const ProfileMatrix& m) {
  using nlohmann::json;
  json pairs = json::array();
  for (std::size_t p : m.pairs()) {
    pairs.push_back({{"instr", isa::name(static_cast<isa::Mnemonic>(p / kNumMutations))},
                     {"mutation", "M" + std::to_string(p % kNumMutations)}});
  }
  json rows = json::array();
  for (std::size_t r = 0; r < m.num_rows(); ++r) {
    json cols = json::array();
    for (std::size_t c = 0; c < m.num_points(); ++c) {
      if (m.d(r, c)) cols.push_back(c);
    }
    rows.push_back(std::move(cols));
  }
  return {{"schema", "mrvfuzz.profile/1"}, {"meta", m.meta},       {"pairs", pairs},
          {"points", m.point_labels},      {"point_ids", m.point_ids}, {"rows", rows}};
}

ProfileMatrix profile_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema") != "mrvfuzz.profile/1") throw OptimizerError("unsupported profile schema");
    std::vector<std::size_t> pairs;
    for (const auto& p : j.at("pairs")) {
      const auto i = isa::parse_mnemonic(p.at("instr").get<std::string>());
      const std::string mut = p.at("mutation").get<std::string>();
      const auto m = parse_mutation(mut);
      if (!i || !m) throw OptimizerError("unknown pair label in profile");
      pairs.push_back(pair_index(*i, static_cast<std::size_t>(*m)));
    }
    const auto& labels = j.at("points");
    const auto& rows = j.at("rows");
    if (rows.size() != pairs.size()) throw OptimizerError("profile row count does not match its pairs");
    ProfileMatrix m(std::move(pairs), labels.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (const auto& c : rows[r]) {
        const auto col = c.get<std::size_t>();
        if (col >= labels.size()) throw OptimizerError("profile column out of range");
        m.set(r, col);
      }
    }
    if (!m.columns_all_covered()) throw OptimizerError("infeasible profile: a point is hit by no pair");
    m.point_labels = labels.get<std::vector<std::string>>();
    if (j.contains("point_ids")) m.point_ids = j.at("point_ids").get<std::vector<uint32_t>>();
    if (j.contains("meta")) m.meta = j.at("meta");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw OptimizerError(std::string("malformed profile: ") + e.what());
  }
}

}  // namespace mrvfuzz
