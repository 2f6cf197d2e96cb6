// Acceptance runner: one PASS/FAIL line per criterion, detail lines
// indented below. Exit status 1 if any criterion fails.

#include <algorithm>
#include <bit>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "../common/asm_reference.hpp"
#include "mrvfuzz/casestudy.hpp"
#include "mrvfuzz/engine.hpp"
#include "mrvfuzz/optimizer.hpp"
#include "mrvfuzz/witnesses.hpp"

using namespace mrvfuzz;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;
  void check(bool ok, std::string what) {
    pass = pass && ok;
    details.push_back((ok ? "ok   " : "FAIL ") + std::move(what));
  }
  void note(std::string what) { details.push_back("     " + std::move(what)); }
};

template <typename... A>
std::string fmt(const char* f, A... a) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

unsigned lanes() { return std::clamp(std::thread::hardware_concurrency(), 1u, 8u); }

// 1 -------------------------------------------------------------------------
Outcome soundness() {
  Outcome o;
  Config c;
  c.lanes = lanes();
  const CampaignReport r = fuzz_loop(c, WeightTable::uniform());
  o.check(r.inputs == 10000, fmt("%llu inputs", static_cast<unsigned long long>(r.inputs)));
  o.check(r.instructions >= 200000, fmt("%llu retired TIs", static_cast<unsigned long long>(r.instructions)));
  o.check(r.mismatches.empty(), fmt("%zu mismatches", r.mismatches.size()));
  o.note(fmt("%zu hangs, %.1f s", r.hangs.size(), r.wall_seconds));
  return o;
}

// 2 -------------------------------------------------------------------------
Outcome witnesses() {
  Outcome o;
  for (const Witness& w : witness_catalog()) {
    const bool on = witness_mismatches(w, BugConfig::only(w.bug));
    const bool off = witness_mismatches(w, BugConfig{});
    o.check(on && !off, fmt("%-18s on=%s off=%s", std::string(name(w.bug)).c_str(), on ? "mismatch" : "clean",
                            off ? "mismatch" : "clean"));
  }
  o.check(witness_catalog().size() == kNumBugs, fmt("%zu witnesses", witness_catalog().size()));
  return o;
}

// 3 -------------------------------------------------------------------------
// Retired TIs at the first mismatch of the first deterministic run (default
// seed, uniform weights, one toggle on). Budgets are 10x these, capped at
// 200,000; the two SUB flag bugs must also land within 5,000.
struct FirstDiscovery {
  Bug bug;
  uint64_t first_observed;
  bool cheap;
};
constexpr FirstDiscovery kFirstDiscovery[] = {
    {Bug::kFenceFields, 20, false},        {Bug::kExcType, 9064, false},
    {Bug::kIllegalAccept, 139468, false},  {Bug::kCacheIncoherence, 281220, false},
    {Bug::kCarrySub, 170, true},           {Bug::kPrivEpcr, 104324, false},
    {Bug::kEearRo, 3472, false},           {Bug::kGpr0Fwd, 25809, false},
    {Bug::kMacOverflow, 20753, false},     {Bug::kOverflowSub, 170, true},
    {Bug::kInstretEbreak, 39668, false},
};
constexpr uint64_t kDiscoveryCap = 200000;
constexpr uint64_t kCheapCap = 5000;

Outcome discovery() {
  Outcome o;
  for (const FirstDiscovery& d : kFirstDiscovery) {
    uint64_t budget = std::min(10 * d.first_observed, kDiscoveryCap);
    if (d.cheap) budget = std::min(budget, kCheapCap);
    Config c;
    c.lanes = lanes();
    c.bugs = BugConfig::only(d.bug);
    c.max_inputs = UINT64_MAX;
    c.max_instructions = budget;
    c.stop_on_mismatch = true;
    const CampaignReport r = fuzz_loop(c, WeightTable::uniform());
    const auto at = r.first_mismatch_instructions();
    const bool ok = at && *at <= budget;
    o.check(ok, fmt("%-18s found at %s retired TIs (budget %llu, first observed %llu)",
                    std::string(name(d.bug)).c_str(), at ? std::to_string(*at).c_str() : "never",
                    static_cast<unsigned long long>(budget), static_cast<unsigned long long>(d.first_observed)));
  }
  return o;
}

// 4 -------------------------------------------------------------------------
std::vector<std::size_t> brute_force_cover(const std::vector<std::vector<uint32_t>>& rows, std::size_t points) {
  std::vector<std::size_t> best;
  bool found = false;
  for (uint32_t s = 0; s < (1u << rows.size()); ++s) {
    std::vector<bool> hit(points, false);
    std::vector<std::size_t> pick;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!(s >> r & 1)) continue;
      pick.push_back(r);
      for (uint32_t c : rows[r]) hit[c] = true;
    }
    if (std::count(hit.begin(), hit.end(), false)) continue;
    if (!found || pick.size() < best.size() || (pick.size() == best.size() && pick < best)) best = pick;
    found = true;
  }
  return best;
}

Outcome optimizer() {
  Outcome o;
  Rng rng(4);
  int agree = 0, feasible = 0, bounded = 0;
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = 1 + rng.below(12), points = 1 + rng.below(20);
    std::vector<std::vector<uint32_t>> rows(n);
    std::vector<bool> covered(points, false);
    for (auto& r : rows) {
      for (uint32_t c = 0; c < points; ++c) {
        if (rng.below(3) == 0) {
          r.push_back(c);
          covered[c] = true;
        }
      }
    }
    for (uint32_t c = 0; c < points; ++c) {
      if (!covered[c]) rows[rng.below(n)].push_back(c);
    }
    const ProfileMatrix m = ProfileMatrix::from_sets(rows, points);
    const auto greedy = greedy_cover(m);
    const auto exact = exact_cover(m);
    feasible += is_cover(m, greedy) && is_cover(m, exact);
    bounded += exact.size() <= greedy.size();
    agree += exact == brute_force_cover(rows, points);
  }
  o.check(feasible == 20, fmt("%d/20 greedy and exact covers feasible", feasible));
  o.check(bounded == 20, fmt("%d/20 |exact| <= |greedy|", bounded));
  o.check(agree == 20, fmt("%d/20 exact equals the exhaustive-subset oracle", agree));
  return o;
}

// 5 -------------------------------------------------------------------------
constexpr uint64_t kGuidanceBudget = 100000;
constexpr int kRepetitions = 10;

uint64_t guidance_hits(uint64_t seed, FuzzMode mode, const WeightTable& w) {
  Config c;
  c.lanes = lanes();
  c.seed = seed;
  c.mode = mode;
  c.max_inputs = UINT64_MAX;
  c.max_instructions = kGuidanceBudget;
  return fuzz_loop(c, w).combined_hits();
}

Outcome guidance() {
  Outcome o;
  const Config defaults;
  const ProfileMatrix m = profile(defaults.runs_per_pair, defaults.seed, lanes());
  const auto q = greedy_cover(m);
  const WeightTable w = weights_from(m, q);
  o.note(fmt("weights: %zu of %zu pairs cover %zu profiled points", q.size(), m.num_rows(), m.num_points()));
  int wins = 0;
  bool default_ok = false;
  for (int k = 0; k < kRepetitions; ++k) {
    const uint64_t seed = defaults.seed + k;
    const uint64_t fb = guidance_hits(seed, FuzzMode::kFeedback, w);
    const uint64_t rnd = guidance_hits(seed, FuzzMode::kRandom, WeightTable::uniform());
    wins += fb > rnd;
    if (k == 0) default_ok = fb >= rnd;
    o.note(fmt("seed %llu: weighted+feedback %llu, random %llu", static_cast<unsigned long long>(seed),
               static_cast<unsigned long long>(fb), static_cast<unsigned long long>(rnd)));
  }
  o.check(default_ok, "default seed: weighted+feedback >= random");
  o.check(wins >= 8, fmt("strictly greater in %d/%d repetitions (need 8)", wins, kRepetitions));
  return o;
}

// 6 -------------------------------------------------------------------------
Outcome casestudy() {
  Outcome o;
  const CaseStudyReport r = run_casestudy(Config{}.seed);
  const CaseStudyRun& full = r.runs.at(0);
  o.check(full.expr_full_cycle && *full.expr_full_cycle <= kCaseStudyMaxCycles,
          fmt("full metrics: expression block4 %u/%u, block6 %u/%u, complete at cycle %s", full.expr_hit_b4,
              full.expr_universe_b4, full.expr_hit_b6, full.expr_universe_b6,
              full.expr_full_cycle ? std::to_string(*full.expr_full_cycle).c_str() : "never"));
  o.check(full.b1_cycle.has_value(), "full metrics flags b1");
  o.check(full.b2_cycle.has_value(), "full metrics flags b2");
  o.check(r.mux_points_b4 == 0 && r.mux_points_b6 == 0,
          fmt("mux points over blocks 4/6: %u/%u", r.mux_points_b4, r.mux_points_b6));
  o.check(r.ctrlreg_points_b4 == 0 && r.ctrlreg_points_b6 == 0,
          fmt("ctrlreg points over blocks 4/6: %u/%u", r.ctrlreg_points_b4, r.ctrlreg_points_b6));
  o.check(r.ctrlreg_universe == 32, fmt("ctrlreg universe %u", r.ctrlreg_universe));
  return o;
}

// 7 -------------------------------------------------------------------------
bool within_add_window(uint32_t before, uint32_t after, unsigned count) {
  const uint32_t data = isa::data_mask(before);
  for (unsigned first = 0; first + count <= 4; ++first) {
    uint32_t win = 0;
    for (unsigned b = first; b < first + count; ++b) win |= 0xFFu << (8 * b);
    win &= data;
    if ((before & ~win) != (after & ~win)) continue;
    const uint64_t mod = uint64_t{1} << std::popcount(win);
    const uint64_t up = (uint64_t{pext(after, win)} + mod - pext(before, win)) % mod;
    const uint64_t down = (uint64_t{pext(before, win)} + mod - pext(after, win)) % mod;
    if (up <= 35 || down <= 35) return true;
  }
  return false;
}

Outcome mutations() {
  Outcome o;
  Rng rng(7);
  int opcode_kept = 0, data_kept = 0, delta_ok = 0, n_data_only = 0, n_m11 = 0, n_add = 0;
  const auto ops = isa::legal_ops();
  for (int k = 0; k < 10000; ++k) {
    std::vector<uint32_t> ti;
    for (std::size_t i = 0; i < kTiCount; ++i) ti.push_back(random_instruction(ops[rng.below(ops.size())], rng));
    const Program p = make_program(ti);
    const std::size_t at = rng.below(kTiCount);
    const auto m = static_cast<MutationId>(rng.below(kNumMutations));
    const uint32_t before = p.ti_words[at];
    const uint32_t after = mutate(p, at, m, rng).ti_words[at];
    const uint32_t op = isa::opcode_mask(before);
    if (is_data_only(m)) {
      ++n_data_only;
      opcode_kept += (after & op) == (before & op);
    }
    if (m == MutationId::M11) {
      ++n_m11;
      data_kept += (after & ~op) == (before & ~op);
    }
    if (m >= MutationId::M5 && m <= MutationId::M7) {
      ++n_add;
      delta_ok += within_add_window(before, after, m == MutationId::M5 ? 1 : m == MutationId::M6 ? 2 : 4);
    }
  }
  o.check(opcode_kept == n_data_only, fmt("M0-M7 kept opcode bits in %d/%d", opcode_kept, n_data_only));
  o.check(data_kept == n_m11, fmt("M11 kept data bits in %d/%d", data_kept, n_m11));
  o.check(delta_ok == n_add, fmt("M5-M7 delta within [-35, 35] in %d/%d", delta_ok, n_add));
  return o;
}

// 8 -------------------------------------------------------------------------
Outcome encoder() {
  Outcome o;
  const auto lines = asmref::load(MRVFUZZ_SOURCE_DIR "/tools/oracle/assembled_reference.txt");
  int compared = 0, matched = 0;
  for (const auto& l : lines) {
    if (!l.mnemonic) {
      o.note("skipped (not a MiniRV instruction): " + l.text);
      continue;
    }
    ++compared;
    const uint32_t w = isa::encode(*l.mnemonic, l.fields);
    if (w == l.word) {
      ++matched;
    } else {
      o.check(false, fmt("%s: encoded 0x%08X, assembler 0x%08X", l.text.c_str(), w, l.word));
    }
  }
  o.check(compared >= 20 && matched == compared, fmt("%d/%d instructions match the assembler", matched, compared));
  return o;
}

// 9 -------------------------------------------------------------------------
Outcome monoid() {
  Outcome o;
  const auto man = dut_manifest();
  Rng rng(9);
  auto random_map = [&] {
    cov::CoverageMap c(man);
    const uint64_t density = rng.below(5);
    for (uint32_t i = 0; i < man->total_points(); ++i) {
      if (rng.below(4) < density) c.set(i);
    }
    return c;
  };
  const cov::CoverageMap empty(man);
  int comm = 0, assoc = 0, idem = 0, absorb = 0, ident = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto a = random_map(), b = random_map(), c = random_map();
    comm += cov::merge(a, b) == cov::merge(b, a);
    assoc += cov::merge(cov::merge(a, b), c) == cov::merge(a, cov::merge(b, c));
    idem += cov::merge(a, a) == a;
    ident += cov::merge(a, empty) == a;
    absorb += cov::delta(cov::merge(a, b), b).empty();
  }
  o.check(comm == 1000, fmt("commutativity %d/1000", comm));
  o.check(assoc == 1000, fmt("associativity %d/1000", assoc));
  o.check(idem == 1000, fmt("idempotence %d/1000", idem));
  o.check(ident == 1000, fmt("identity %d/1000", ident));
  o.check(absorb == 1000, fmt("delta absorption %d/1000", absorb));
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"differential soundness", soundness},
      {"witness completeness", witnesses},
      {"fuzz discovery budget", discovery},
      {"optimizer correctness", optimizer},
      {"coverage-guidance benefit", guidance},
      {"case-study reproduction", casestudy},
      {"mutation contract", mutations},
      {"encoder fidelity", encoder},
      {"monoid laws", monoid},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [title, run] : criteria) {
    ++n;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::printf("%s %d %s\n", o.pass ? "PASS" : "FAIL", n, title);
    for (const std::string& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed == 0 ? 0 : 1;
}
