#include "mrvfuzz/casestudy.hpp"

#include <deque>
#include <sstream>

#include "mrvfuzz/rng.hpp"

namespace mrvfuzz {
namespace {

constexpr std::size_t kSeedSequences = 4;
constexpr std::size_t kMutantsPerEntry = 10;

using Sequence = std::vector<CtrlInput>;

Sequence random_sequence(Rng& rng) {
  Sequence s(kCaseStudySeqLen);
  for (CtrlInput& in : s) in = CtrlInput::from_bits(static_cast<uint32_t>(rng.below(32)));
  return s;
}

Sequence mutate_sequence(Sequence s, Rng& rng) {
  CtrlInput& in = s[rng.below(s.size())];
  if (rng.below(4) == 0) {
    in = CtrlInput::from_bits(static_cast<uint32_t>(rng.below(32)));
  } else {
    in = CtrlInput::from_bits(in.bits() ^ (1u << rng.below(5)));
  }
  return s;
}

uint32_t hits_in(const cov::CoverageMap& m, cov::Metric metric, std::string_view block) {
  const cov::CoverageManifest& man = m.manifest();
  uint32_t n = 0;
  for (const cov::ProbeDecl& d : man.probes()) {
    if (d.metric != metric || d.block != block) continue;
    for (uint32_t i = 0; i < d.size; ++i) n += m.test(d.offset + i);
  }
  return n;
}

}  // namespace

CaseStudyRun casestudy_campaign(cov::MetricSet feedback, uint64_t seed, uint64_t max_cycles) {
  const auto manifest = controller_manifest();
  const auto mask = manifest->metric_mask(feedback);
  const auto u4 = manifest->universe_per_metric("4");
  const auto u6 = manifest->universe_per_metric("6");
  const auto expr = static_cast<std::size_t>(cov::Metric::kExpression);

  CaseStudyRun run;
  run.feedback = feedback.to_string();
  run.expr_universe_b4 = u4[expr];
  run.expr_universe_b6 = u6[expr];

  BugConfig buggy;
  buggy.enable(Bug::kCsB1);
  buggy.enable(Bug::kCsB2);

  Rng rng(seed);
  cov::CoverageMap global(manifest);
  std::deque<Sequence> corpus;
  std::size_t cursor = 0;

  auto execute = [&](const Sequence& s, bool is_seed) {
    if (run.cycles + s.size() > max_cycles) return false;
    const ControllerRun golden = controller_run(s, BugConfig{});
    ControllerRun dut = controller_run(s, buggy);
    for (std::size_t k = 0; k < s.size(); ++k) {
      const uint64_t at = run.cycles + k + 1;
      if (!run.b1_cycle && golden.outputs[k].state != dut.outputs[k].state) run.b1_cycle = at;
      if (!run.b2_cycle && golden.outputs[k].vld != dut.outputs[k].vld) run.b2_cycle = at;
    }
    run.cycles += s.size();
    ++run.inputs;
    const bool fresh = cov::has_new(global, dut.coverage, mask);
    global.merge_from(dut.coverage);
    if (is_seed || fresh) corpus.push_back(s);
    run.expr_hit_b4 = hits_in(global, cov::Metric::kExpression, "4");
    run.expr_hit_b6 = hits_in(global, cov::Metric::kExpression, "6");
    if (!run.expr_full_cycle && run.expr_hit_b4 == run.expr_universe_b4 && run.expr_hit_b6 == run.expr_universe_b6) {
      run.expr_full_cycle = run.cycles;
    }
    return true;
  };

  for (std::size_t i = 0; i < kSeedSequences; ++i) {
    if (!execute(random_sequence(rng), true)) break;
  }
  bool budget_left = !corpus.empty();
  while (budget_left) {
    if (cursor >= corpus.size()) cursor = 0;
    const Sequence parent = corpus[cursor++];
    for (std::size_t k = 0; k < kMutantsPerEntry && budget_left; ++k) {
      budget_left = execute(mutate_sequence(parent, rng), false);
    }
  }
  run.corpus = corpus.size();
  return run;
}

CaseStudyReport run_casestudy(uint64_t seed, uint64_t max_cycles) {
  using cov::Metric;
  CaseStudyReport r;
  r.runs.push_back(casestudy_campaign(cov::default_feedback_metrics(), seed, max_cycles));
  r.runs.push_back(casestudy_campaign(cov::MetricSet{Metric::kMux}, seed, max_cycles));
  r.runs.push_back(casestudy_campaign(cov::MetricSet{Metric::kCtrlReg}, seed, max_cycles));

  const auto manifest = controller_manifest();
  const auto u4 = manifest->universe_per_metric("4");
  const auto u6 = manifest->universe_per_metric("6");
  const auto all = manifest->universe_per_metric();
  const auto mux = static_cast<std::size_t>(Metric::kMux);
  const auto ctrl = static_cast<std::size_t>(Metric::kCtrlReg);
  r.mux_points_b4 = u4[mux];
  r.mux_points_b6 = u6[mux];
  r.ctrlreg_points_b4 = u4[ctrl];
  r.ctrlreg_points_b6 = u6[ctrl];
  r.mux_universe = all[mux];
  r.ctrlreg_universe = all[ctrl];
  return r;
}

nlohmann::json to_json(const CaseStudyReport& r) {
  using nlohmann::json;
  auto opt = [](const std::optional<uint64_t>& v) { return v ? json(*v) : json(nullptr); };
  json runs = json::array();
  for (const CaseStudyRun& run : r.runs) {
    runs.push_back({{"feedback", run.feedback},
                    {"inputs", run.inputs},
                    {"cycles", run.cycles},
                    {"b1_found", bool(run.b1_cycle)},
                    {"b1_cycle", opt(run.b1_cycle)},
                    {"b2_found", bool(run.b2_cycle)},
                    {"b2_cycle", opt(run.b2_cycle)},
                    {"expr_block4", {run.expr_hit_b4, run.expr_universe_b4}},
                    {"expr_block6", {run.expr_hit_b6, run.expr_universe_b6}},
                    {"expr_full_cycle", opt(run.expr_full_cycle)},
                    {"corpus", run.corpus}});
  }
  return {{"schema", "mrvfuzz.casestudy/1"},
          {"runs", runs},
          {"mux_points", {{"block4", r.mux_points_b4}, {"block6", r.mux_points_b6}, {"total", r.mux_universe}}},
          {"ctrlreg_points",
           {{"block4", r.ctrlreg_points_b4}, {"block6", r.ctrlreg_points_b6}, {"total", r.ctrlreg_universe}}}};
}

std::string format_casestudy(const CaseStudyReport& r) {
  std::ostringstream os;
  auto cyc = [](const std::optional<uint64_t>& v) { return v ? "yes (cycle " + std::to_string(*v) + ")" : std::string("no"); };
  for (const CaseStudyRun& run : r.runs) {
    os << "feedback=" << run.feedback << "\n"
       << "  inputs=" << run.inputs << " cycles=" << run.cycles << " corpus=" << run.corpus << "\n"
       << "  expression coverage: block4 " << run.expr_hit_b4 << "/" << run.expr_universe_b4 << ", block6 "
       << run.expr_hit_b6 << "/" << run.expr_universe_b6 << ", complete at " << cyc(run.expr_full_cycle) << "\n"
       << "  b1 flagged: " << cyc(run.b1_cycle) << "\n"
       << "  b2 flagged: " << cyc(run.b2_cycle) << "\n";
  }
  os << "mux points: block4=" << r.mux_points_b4 << " block6=" << r.mux_points_b6 << " total=" << r.mux_universe
     << "\n"
     << "ctrlreg points: block4=" << r.ctrlreg_points_b4 << " block6=" << r.ctrlreg_points_b6
     << " total=" << r.ctrlreg_universe << "\n";
  return os.str();
}

}  // namespace mrvfuzz
