#include "mrvfuzz/engine.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

namespace mrvfuzz {
namespace {

using nlohmann::json;

template <typename T>
std::vector<T> sorted(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return v;
}

json gpr_json(const std::vector<GprWrite>& ws) {
  json a = json::array();
  for (const auto& w : ws) a.push_back({w.index, hex32(w.value)});
  return a;
}

json csr_json(const std::vector<CsrWrite>& ws) {
  json a = json::array();
  for (const auto& w : ws) a.push_back({hex32(w.addr), hex32(w.value)});
  return a;
}

json mem_json(const std::vector<MemWrite>& ws) {
  json a = json::array();
  for (const auto& w : ws) a.push_back({hex32(w.addr), w.size, hex32(w.value)});
  return a;
}

json exc_json(const std::optional<uint32_t>& e) { return e ? json(*e) : json(nullptr); }

std::optional<Mismatch> diff_event(uint64_t i, const CommitEvent& d, const CommitEvent& g) {
  if (d.pc != g.pc) return Mismatch{i, DiffField::kPc, hex32(d.pc), hex32(g.pc)};
  if (d.instr_word != g.instr_word) {
    return Mismatch{i, DiffField::kInstrWord, hex32(d.instr_word), hex32(g.instr_word)};
  }
  if (auto a = sorted(d.gpr_writes), b = sorted(g.gpr_writes); a != b) {
    return Mismatch{i, DiffField::kGprWrite, gpr_json(a), gpr_json(b)};
  }
  if (auto a = sorted(d.csr_writes), b = sorted(g.csr_writes); a != b) {
    return Mismatch{i, DiffField::kCsrWrite, csr_json(a), csr_json(b)};
  }
  if (auto a = sorted(d.mem_writes), b = sorted(g.mem_writes); a != b) {
    return Mismatch{i, DiffField::kMemWrite, mem_json(a), mem_json(b)};
  }
  if (d.exception != g.exception) {
    return Mismatch{i, DiffField::kException, exc_json(d.exception), exc_json(g.exception)};
  }
  return std::nullopt;
}

json trace_end_json(const ArchTrace& t) {
  return {{"events", t.events.size()}, {"status", to_string(t.status)}};
}

}  // namespace

std::string_view name(DiffField f) {
  constexpr std::array<std::string_view, 7> kNames{"pc",        "instr_word", "gpr_write",   "csr_write",
                                                   "mem_write", "exception",  "trace_length"};
  return kNames[static_cast<std::size_t>(f)];
}

std::vector<Mismatch> diff_traces(const ArchTrace& dut, const ArchTrace& grm) {
  const std::size_t n = std::min(dut.events.size(), grm.events.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto m = diff_event(i, dut.events[i], grm.events[i])) return {std::move(*m)};
  }
  if (dut.events.size() != grm.events.size()) {
    return {Mismatch{n, DiffField::kTraceLength, trace_end_json(dut), trace_end_json(grm)}};
  }
  return {};
}

RunOutcome run_input(const Program& p, BugConfig bugs, uint64_t max_cycles) {
  const MemoryImage image = build_image(p);
  const uint64_t budget = instruction_budget(p);

  ArchState s = grm_reset(image, p.entry_pc);
  ArchTrace grm = grm_run(s, budget, p.halt_pc());

  Dut dut(image, p.entry_pc, bugs, dut_manifest(),
          {.max_cycles = max_cycles, .max_commits = budget, .halt_pc = p.halt_pc()});
  DutRunResult d = dut_run(dut);

  RunOutcome o{.dut = std::move(d.trace), .grm = std::move(grm), .coverage = std::move(d.coverage)};
  o.mismatches = diff_traces(o.dut, o.grm);
  o.status = o.dut.status;
  o.hang = d.hang;
  o.cycles = d.cycles;
  o.retired_tis = static_cast<uint64_t>(std::count_if(
      o.dut.events.begin(), o.dut.events.end(), [&](const CommitEvent& e) { return p.is_ti_pc(e.pc); }));
  return o;
}

json to_json(const MismatchReport& r) {
  return {{"program", r.program_path},
          {"program_hash", r.program_hash},
          {"input_index", r.input_index},
          {"event_index", r.mismatch.event_index},
          {"field", name(r.mismatch.field)},
          {"dut", r.mismatch.dut_value},
          {"grm", r.mismatch.grm_value},
          {"bugs", r.bugs},
          {"rng_seed", r.rng_seed},
          {"instructions", r.instructions}};
}

std::optional<uint64_t> CampaignReport::first_mismatch_instructions() const {
  if (mismatches.empty()) return std::nullopt;
  return mismatches.front().instructions;
}

uint64_t CampaignReport::combined_hits() const {
  return coverage.count(coverage.manifest().metric_mask(cov::default_feedback_metrics()));
}

CampaignReport fuzz_loop(const Config& config, const WeightTable& weights) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const auto manifest = dut_manifest();
  const auto feedback_mask = manifest->metric_mask(config.metrics);
  const auto six_mask = manifest->metric_mask(cov::default_feedback_metrics());
  const bool feedback = config.mode == FuzzMode::kFeedback;
  const WeightTable& seed_weights = feedback ? weights : WeightTable::uniform();

  CampaignReport r{.config = config, .coverage = cov::CoverageMap(manifest)};
  Rng rng(config.seed);
  bool stop = false;
  uint64_t last_hits = 0;

  auto out_of_budget = [&] {
    if (stop) return true;
    if (config.max_instructions != 0 && r.instructions >= config.max_instructions) return true;
    if (config.max_seconds > 0 &&
        std::chrono::duration<double>(Clock::now() - start).count() >= config.max_seconds) {
      return true;
    }
    return false;
  };

  auto process = [&](const Program& p, RunOutcome& o, bool is_seed) {
    const uint64_t input_index = r.runs;
    ++r.runs;
    r.instructions += o.retired_tis;
    if (o.hang) r.hangs.push_back({program_hash(p), input_index, o.cycles});
    for (const Mismatch& m : o.mismatches) {
      // A hung DUT trace is shorter by construction; only earlier divergence counts.
      if (o.hang && m.field == DiffField::kTraceLength) continue;
      const std::string hash = program_hash(p);
      r.mismatches.push_back({.program_path = "crashes/" + hash + ".thzi",
                              .program_hash = hash,
                              .input_index = input_index,
                              .mismatch = m,
                              .bugs = config.bugs.to_string(),
                              .rng_seed = config.seed,
                              .instructions = r.instructions});
      r.crash_programs.push_back(p);
      if (config.stop_on_mismatch) stop = true;
    }
    if (feedback) {
      if (is_seed) {
        r.corpus.add_seed(p);
      } else {
        r.corpus.retain(p, cov::delta(r.coverage, o.coverage, feedback_mask));
      }
    }
    r.coverage.merge_from(o.coverage);
    const uint64_t hits = r.coverage.count(six_mask);
    if (hits != last_hits) {
      r.curve.emplace_back(r.instructions, hits);
      last_hits = hits;
    }
  };

  // Runs a batch on the worker lanes and consumes results in batch order,
  // so the outcome does not depend on the lane count.
  auto run_batch = [&](const std::vector<Program>& batch, bool seeds) {
    std::vector<std::optional<RunOutcome>> results(batch.size());
    const unsigned lanes = std::min<unsigned>(config.lanes, static_cast<unsigned>(batch.size()));
    if (lanes <= 1) {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (out_of_budget()) break;
        results[i] = run_input(batch[i], config.bugs, config.max_cycles);
        process(batch[i], *results[i], seeds);
      }
      return;
    }
    std::vector<std::jthread> workers;
    for (unsigned lane = 0; lane < lanes; ++lane) {
      workers.emplace_back([&, lane] {
        for (std::size_t i = lane; i < batch.size(); i += lanes) {
          results[i] = run_input(batch[i], config.bugs, config.max_cycles);
        }
      });
    }
    workers.clear();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (out_of_budget()) break;
      process(batch[i], *results[i], seeds);
    }
  };

  std::vector<Program> batch;
  auto seed_round = [&] {
    batch.clear();
    for (uint32_t s = 0; s < config.seeds; ++s) {
      SeedResult seed = gen_seed(rng, seed_weights);
      r.seed_fallbacks += seed.fell_back;
      batch.push_back(std::move(seed.program));
    }
    run_batch(batch, true);
  };
  seed_round();
  uint32_t since_seeds = 0;

  while (r.inputs < config.max_inputs && !out_of_budget()) {
    batch.clear();
    const uint64_t n = std::min<uint64_t>(config.mutants_per_entry, config.max_inputs - r.inputs);
    if (feedback) {
      const bool due = config.reseed_every != 0 && since_seeds >= config.reseed_every;
      const CorpusEntry* parent = due ? nullptr : r.corpus.dequeue();
      if (parent == nullptr) {
        ++r.seed_rounds;
        since_seeds = 0;
        seed_round();
        continue;
      }
      ++since_seeds;
      const Program p = parent->program;
      for (uint64_t k = 0; k < n; ++k) {
        const ImChoice c = select_im(p, weights, rng);
        r.select_fallbacks += c.fell_back;
        batch.push_back(mutate(p, c.ti_index, c.mutation, rng));
      }
    } else {
      for (uint64_t k = 0; k < n; ++k) batch.push_back(gen_seed(rng, seed_weights).program);
    }
    const uint64_t runs_before = r.runs;
    run_batch(batch, false);
    r.inputs += r.runs - runs_before;
  }

  if (r.curve.empty() || r.curve.back().first != r.instructions) r.curve.emplace_back(r.instructions, last_hits);
  r.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

json campaign_json(const CampaignReport& r) {
  json curve = json::array();
  for (const auto& [instr, hits] : r.curve) curve.push_back({instr, hits});
  json mismatches = json::array();
  for (const auto& m : r.mismatches) mismatches.push_back(to_json(m));
  json hangs = json::array();
  for (const auto& h : r.hangs) {
    hangs.push_back({{"program_hash", h.program_hash}, {"input_index", h.input_index}, {"cycles", h.cycles}});
  }
  const auto first = r.first_mismatch_instructions();
  const cov::MetricTotals t = cov::totals(r.coverage);
  json totals = json::object();
  for (std::size_t i = 0; i < cov::kNumMetrics; ++i) {
    totals[std::string(cov::name(static_cast<cov::Metric>(i)))] = {{"hit", t.hit[i]}, {"universe", t.universe[i]}};
  }
  return {{"schema", "mrvfuzz.campaign/1"},
          {"config", r.config.to_json()},
          {"instruction_counting", "retired TIs: DUT commits whose pc lies in the TI region, over all runs"},
          {"schedule", {{"order", "fifo-dequeue, seed round every reseed_every entries or when drained"}, {"mutants_per_entry", r.config.mutants_per_entry}, {"reseed_every", r.config.reseed_every}}},
          {"inputs", r.inputs},
          {"runs", r.runs},
          {"instructions", r.instructions},
          {"seed_rounds", r.seed_rounds},
          {"seed_fallbacks", r.seed_fallbacks},
          {"select_fallbacks", r.select_fallbacks},
          {"corpus_size", r.corpus.size()},
          {"coverage", {{"manifest_hash", hash_hex(r.coverage.manifest_id())}, {"totals", totals},
                        {"combined_six_metric_hits", r.combined_hits()}}},
          {"curve", curve},
          {"mismatch_count", r.mismatches.size()},
          {"first_mismatch_instructions", first ? json(*first) : json(nullptr)},
          {"mismatches", mismatches},
          {"hangs", hangs},
          {"wall_seconds", r.wall_seconds}};
}

void write_campaign(const CampaignReport& r, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "corpus");
  fs::create_directories(dir / "crashes");
  write_text(dir / "campaign.json", campaign_json(r).dump(2) + "\n");
  std::string lines;
  for (const auto& m : r.mismatches) lines += to_json(m).dump() + "\n";
  write_text(dir / "mismatches.jsonl", lines);
  for (const CorpusEntry& e : r.corpus.entries()) {
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%06llu_", static_cast<unsigned long long>(e.id));
    write_thzi(dir / "corpus" / (prefix + e.hash + ".thzi"), e.program);
  }
  for (std::size_t i = 0; i < r.mismatches.size(); ++i) {
    write_thzi(dir / r.mismatches[i].program_path, r.crash_programs[i]);
  }
  write_text(dir / "coverage.json", cov::coverage_report_json(r.coverage, r.curve).dump(2) + "\n");
}

std::string format_replay(const RunOutcome& o) {
  std::ostringstream os;
  const std::optional<Mismatch> first =
      o.mismatches.empty() ? std::nullopt : std::optional<Mismatch>(o.mismatches.front());
  const std::size_t last = first ? first->event_index : std::max(o.dut.events.size(), o.grm.events.size());
  for (std::size_t i = 0; i <= last; ++i) {
    const bool hd = i < o.dut.events.size(), hg = i < o.grm.events.size();
    if (!hd && !hg) break;
    os << "dut " << (hd ? format_event(o.dut.events[i]) : std::string("<end>")) << '\n';
    os << "grm " << (hg ? format_event(o.grm.events[i]) : std::string("<end>")) << '\n';
  }
  if (first) {
    os << "MISMATCH at event " << first->event_index << " field " << name(first->field)
       << ": dut=" << first->dut_value.dump() << " grm=" << first->grm_value.dump() << '\n';
  } else {
    os << "traces identical (" << o.dut.events.size() << " events, " << to_string(o.status) << ")\n";
  }
  return os.str();
}

}  // namespace mrvfuzz
