#include <gtest/gtest.h>

#include <cstdlib>

#include "mrvfuzz/config.hpp"

using namespace mrvfuzz;

TEST(Config, Defaults) {
  const Config c;
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.max_inputs, 10000u);
  EXPECT_EQ(c.mutants_per_entry, 50u);
  EXPECT_EQ(c.seeds, 10u);
  EXPECT_EQ(c.max_cycles, 2000u);
  EXPECT_EQ(c.runs_per_pair, 5u);
  EXPECT_EQ(c.metrics, cov::default_feedback_metrics());
  EXPECT_TRUE(c.bugs.none());
}

TEST(Config, ParseAndRoundtrip) {
  const Config c = parse_config(
      "# campaign\n"
      "rng.seed = 7\n"
      "bugs.enabled = CARRY_SUB, EEAR_RO\n"
      "fuzz.max_inputs=12   # trailing comment\n"
      "fuzz.mode = random\n"
      "feedback.metrics = expression,fsm\n"
      "\n");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.bugs, (BugConfig{Bug::kCarrySub, Bug::kEearRo}));
  EXPECT_EQ(c.max_inputs, 12u);
  EXPECT_EQ(c.mode, FuzzMode::kRandom);
  EXPECT_EQ(c.metrics, (cov::MetricSet{cov::Metric::kExpression, cov::Metric::kFsm}));
  EXPECT_EQ(parse_config(c.to_text()).to_text(), c.to_text());
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("fuzz.bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("rng.seed\n"), ConfigError);
  EXPECT_THROW(parse_config("rng.seed = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("dut.max_cycles = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("fuzz.mode = sometimes\n"), ConfigError);
  EXPECT_THROW(parse_config("bugs.enabled = NOT_A_BUG\n"), ConfigError);
  EXPECT_THROW(parse_config("feedback.metrics = colour\n"), ConfigError);
  EXPECT_THROW(parse_config("fuzz.seeds = 0\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/mrvfuzz.cfg"), ConfigError);
}

TEST(Config, OutputDirOverride) {
  Config c;
  c.out = "from_config";
  ::unsetenv("THEHUZZ_OUT");
  EXPECT_EQ(output_dir(c), std::filesystem::path("from_config"));
  ::setenv("THEHUZZ_OUT", "/tmp/from_env", 1);
  EXPECT_EQ(output_dir(c), std::filesystem::path("/tmp/from_env"));
  ::unsetenv("THEHUZZ_OUT");
}
