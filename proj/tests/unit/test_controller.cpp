#include <gtest/gtest.h>

#include "mrvfuzz/casestudy.hpp"
#include "mrvfuzz/controller.hpp"
#include "mrvfuzz/program.hpp"
#include "mrvfuzz/rng.hpp"
#include "mrvfuzz/witnesses.hpp"

using namespace mrvfuzz;

namespace {

const BugConfig kBoth{Bug::kCsB1, Bug::kCsB2};

bool block_expr_full(const cov::CoverageMap& m, std::string_view block) {
  for (const cov::ProbeDecl& d : m.manifest().probes()) {
    if (d.metric != cov::Metric::kExpression || d.block != block) continue;
    for (uint32_t i = 0; i < d.size; ++i) {
      if (!m.test(d.offset + i)) return false;
    }
  }
  return true;
}

}  // namespace

TEST(Controller, IdleOnZeroInputs) {
  const ControllerRun r = controller_run(std::vector<CtrlInput>(50), kBoth);
  for (const CtrlOutput& o : r.outputs) {
    EXPECT_EQ(o.state, CtrlState::kIdle);
    EXPECT_FALSE(o.vld);
  }
}

TEST(Controller, FlushWithoutEnable) {
  const std::vector<CtrlInput> in{{.flush = true}};
  EXPECT_FALSE(controller_run(in, BugConfig{}).outputs[0].vld);
  EXPECT_TRUE(controller_run(in, BugConfig::only(Bug::kCsB2)).outputs[0].vld);
}

TEST(Controller, DebugReadWithoutPassword) {
  const std::vector<CtrlInput> in{{.debug_en = true, .pass = false, .ipass = true}};
  EXPECT_NE(controller_run(in, BugConfig{}).outputs[0].state, CtrlState::kDRead);
  EXPECT_EQ(controller_run(in, BugConfig::only(Bug::kCsB1)).outputs[0].state, CtrlState::kDRead);
  const std::vector<CtrlInput> ok{{.debug_en = true, .pass = true, .ipass = false}};
  EXPECT_EQ(controller_run(ok, BugConfig{}).outputs[0].state, CtrlState::kDRead);
}

TEST(Controller, ToggleVariantsOnlyMatterForCaseStudyBugs) {
  Rng rng(10);
  std::vector<CtrlInput> in(64);
  for (CtrlInput& i : in) i = CtrlInput::from_bits(static_cast<uint32_t>(rng.below(32)));
  BugConfig dut_bugs;
  for (Bug b : all_bugs()) {
    if (b != Bug::kCsB1 && b != Bug::kCsB2) dut_bugs.enable(b);
  }
  EXPECT_EQ(controller_run(in, BugConfig{}).outputs, controller_run(in, dut_bugs).outputs);
}

// Covering every input vector of a corrupted expression forces an output difference.
TEST(Controller, FullExpressionCoverageExposesBug) {
  Rng rng(11);
  int full4 = 0, full6 = 0;
  for (int k = 0; k < 3000; ++k) {
    std::vector<CtrlInput> in(8 + rng.below(24));
    for (CtrlInput& i : in) i = CtrlInput::from_bits(static_cast<uint32_t>(rng.below(32)));
    const ControllerRun golden = controller_run(in, BugConfig{});
    const ControllerRun b1 = controller_run(in, BugConfig::only(Bug::kCsB1));
    const ControllerRun b2 = controller_run(in, BugConfig::only(Bug::kCsB2));
    if (block_expr_full(b1.coverage, "4")) {
      ++full4;
      bool differs = false;
      for (std::size_t c = 0; c < in.size(); ++c) differs |= golden.outputs[c].state != b1.outputs[c].state;
      ASSERT_TRUE(differs);
    }
    if (block_expr_full(b2.coverage, "6")) {
      ++full6;
      bool differs = false;
      for (std::size_t c = 0; c < in.size(); ++c) differs |= golden.outputs[c].vld != b2.outputs[c].vld;
      ASSERT_TRUE(differs);
    }
  }
  EXPECT_GT(full4, 100);
  EXPECT_GT(full6, 100);
}

TEST(Controller, CtlRoundtrip) {
  const std::vector<CtrlInput> in{CtrlInput::from_bits(0b10110), CtrlInput::from_bits(0b00001)};
  EXPECT_EQ(parse_ctl(format_ctl(in)), in);
  EXPECT_EQ(parse_ctl("# c\n1 0 1 1 0 # trailing\n\n"), (std::vector<CtrlInput>{CtrlInput::from_bits(0b10110)}));
  EXPECT_THROW(parse_ctl("1 0 1\n"), FormatError);
  EXPECT_THROW(parse_ctl("1 0 2 0 0\n"), FormatError);
}

TEST(CaseStudy, FullMetricsFindsBothBugs) {
  const CaseStudyReport r = run_casestudy(42);
  ASSERT_EQ(r.runs.size(), 3u);
  const CaseStudyRun& full = r.runs[0];
  EXPECT_TRUE(full.b1_cycle);
  EXPECT_TRUE(full.b2_cycle);
  ASSERT_TRUE(full.expr_full_cycle);
  EXPECT_LE(*full.expr_full_cycle, kCaseStudyMaxCycles);
  EXPECT_EQ(full.expr_hit_b4, full.expr_universe_b4);
  EXPECT_EQ(full.expr_hit_b6, full.expr_universe_b6);
  EXPECT_EQ(r.mux_points_b4 + r.mux_points_b6, 0u);
  EXPECT_EQ(r.ctrlreg_points_b4 + r.ctrlreg_points_b6, 0u);
  EXPECT_EQ(r.ctrlreg_universe, 32u);
  for (const CaseStudyRun& run : r.runs) EXPECT_LE(run.cycles, kCaseStudyMaxCycles);
  EXPECT_EQ(to_json(r).at("schema"), "mrvfuzz.casestudy/1");
}

TEST(CaseStudy, Deterministic) {
  EXPECT_EQ(to_json(run_casestudy(7, 2000)), to_json(run_casestudy(7, 2000)));
}
