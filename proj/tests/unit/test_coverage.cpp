#include <gtest/gtest.h>

#include "mrvfuzz/controller.hpp"
#include "mrvfuzz/coverage.hpp"
#include "mrvfuzz/dut.hpp"
#include "mrvfuzz/rng.hpp"

using namespace mrvfuzz;
using namespace mrvfuzz::cov;

namespace {

std::shared_ptr<CoverageManifest> small_manifest() {
  auto m = std::make_shared<CoverageManifest>("small");
  m->add_statement("s");
  m->add_branch("b");
  m->add_expression("e", {"x", "y", "z"});
  m->add_toggle("t", 4, true);
  m->add_fsm("f", {"A", "B"}, {{0, 1}, {1, 0}});
  return m;
}

CoverageMap random_map(const std::shared_ptr<const CoverageManifest>& m, Rng& rng) {
  CoverageMap c(m);
  const uint64_t density = rng.below(4);
  for (uint32_t i = 0; i < m->total_points(); ++i) {
    if (rng.below(4) < density) c.set(i);
  }
  return c;
}

}  // namespace

TEST(Coverage, RecordExamples) {
  const auto man = small_manifest();
  CoverageMap c(man);
  const ProbeId t = *man->find("t");
  c.hit_toggle(t, 0, Toggle::k01);
  EXPECT_EQ(man->point_label(man->probe(t).offset), "toggle:t:bit0 0->1");
  EXPECT_TRUE(c.test(man->probe(t).offset));

  const ProbeId e = *man->find("e");
  c.hit_vector(e, 0b101);
  EXPECT_TRUE(c.test(man->probe(e).offset + 5));
  EXPECT_EQ(man->probe(e).size, 8u);

  const ProbeId b = *man->find("b");
  c.hit_branch(b, true);
  const CoverageMap once = c;
  c.hit_branch(b, true);
  EXPECT_EQ(c, once);
}

TEST(Coverage, RecordRejectsOutOfUniverse) {
  const auto man = small_manifest();
  CoverageMap c(man);
  EXPECT_THROW(c.hit_vector(*man->find("e"), 8), CoverageError);
  EXPECT_THROW(c.hit_branch(*man->find("s"), true), CoverageError);
  EXPECT_THROW(c.hit_fsm_transition(*man->find("f"), 0, 0), CoverageError);
  EXPECT_THROW(c.record("missing", 0), CoverageError);
}

TEST(Coverage, MergeAndDeltaExamples) {
  const auto man = small_manifest();
  Rng rng(5);
  const CoverageMap x = random_map(man, rng);
  const CoverageMap empty(man);
  EXPECT_EQ(merge(x, empty), x);
  EXPECT_TRUE(delta(x, empty).empty());
  EXPECT_TRUE(delta(x, x).empty());

  CoverageMap a(man), b(man);
  a.set(0);
  b.set(1);
  EXPECT_EQ(delta(a, b), (std::vector<uint32_t>{1}));
  EXPECT_TRUE(delta(merge(a, b), b).empty());

  const auto other = std::make_shared<CoverageManifest>("other");
  other->add_statement("s");
  CoverageMap o(other);
  EXPECT_THROW(a.merge_from(o), CoverageError);
  EXPECT_THROW(delta(a, o), CoverageError);
}

TEST(Coverage, MonoidLawsRandomized) {
  const auto man = small_manifest();
  Rng rng(6);
  const CoverageMap empty(man);
  for (int k = 0; k < 1000; ++k) {
    const CoverageMap a = random_map(man, rng), b = random_map(man, rng), c = random_map(man, rng);
    ASSERT_EQ(merge(a, b), merge(b, a));
    ASSERT_EQ(merge(merge(a, b), c), merge(a, merge(b, c)));
    ASSERT_EQ(merge(a, a), a);
    ASSERT_EQ(merge(a, empty), a);
    ASSERT_TRUE(delta(merge(a, b), b).empty());
  }
}

TEST(Coverage, Totals) {
  const auto man = small_manifest();
  CoverageMap c(man);
  const MetricTotals zero = totals(c);
  for (std::size_t m = 0; m < kNumMetrics; ++m) EXPECT_EQ(zero.hit[m], 0u);
  for (uint32_t i = 0; i < man->total_points(); ++i) c.set(i);
  const MetricTotals full = totals(c);
  EXPECT_EQ(full.hit, full.universe);
  EXPECT_EQ(full.universe[static_cast<std::size_t>(Metric::kToggle)], 4u * 6u);
  EXPECT_EQ(full.universe[static_cast<std::size_t>(Metric::kFsm)], 2u + 2u);
}

TEST(Coverage, ConstantSignalAndIdleFsm) {
  const auto man = small_manifest();
  CoverageMap c(man);
  ToggleTracker tr(*man->find("t"), 4, 0b1010);
  for (int k = 0; k < 10; ++k) tr.sample(c, 0b1010);
  EXPECT_EQ(c.count(), 0u);
  for (int k = 0; k < 10; ++k) c.hit_fsm_state(*man->find("f"), 0);
  EXPECT_EQ(c.count(), 1u);
}

TEST(Coverage, ManifestIdentity) {
  EXPECT_EQ(small_manifest()->id(), small_manifest()->id());
  EXPECT_NE(small_manifest()->id(), dut_manifest()->id());
  EXPECT_EQ(dut_manifest()->to_text(), dut_manifest()->to_text());
}

TEST(Coverage, ControllerManifestBlocks) {
  const auto man = controller_manifest();
  const auto mux = static_cast<std::size_t>(Metric::kMux);
  const auto ctrl = static_cast<std::size_t>(Metric::kCtrlReg);
  EXPECT_EQ(man->universe_per_metric("4")[mux], 0u);
  EXPECT_EQ(man->universe_per_metric("6")[mux], 0u);
  EXPECT_EQ(man->universe_per_metric("4")[ctrl], 0u);
  EXPECT_EQ(man->universe_per_metric("6")[ctrl], 0u);
  EXPECT_EQ(man->universe_per_metric()[ctrl], 32u);
  EXPECT_GT(man->universe_per_metric()[mux], 0u);
  const auto expr = static_cast<std::size_t>(Metric::kExpression);
  EXPECT_GT(man->universe_per_metric("4")[expr], 0u);
  EXPECT_GT(man->universe_per_metric("6")[expr], 0u);
}

TEST(Coverage, MetricSetParsing) {
  EXPECT_EQ(MetricSet::parse("statement,branch,condition,expression,toggle,fsm"), default_feedback_metrics());
  EXPECT_THROW(MetricSet::parse("statement,colour"), std::invalid_argument);
  EXPECT_EQ(MetricSet::parse(all_metrics().to_string()), all_metrics());
}

TEST(Coverage, ReportJson) {
  const auto man = small_manifest();
  CoverageMap c(man);
  c.set(0);
  const auto j = coverage_report_json(c, {{1, 1}, {2, 1}});
  EXPECT_EQ(j.at("unhit").size(), man->total_points() - 1);
  EXPECT_EQ(j.at("curve").size(), 2u);
}
