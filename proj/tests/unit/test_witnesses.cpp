#include <gtest/gtest.h>

#include <set>

#include "mrvfuzz/engine.hpp"
#include "mrvfuzz/witnesses.hpp"

using namespace mrvfuzz;

TEST(Witnesses, OnePerBug) {
  std::set<Bug> seen;
  for (const Witness& w : witness_catalog()) EXPECT_TRUE(seen.insert(w.bug).second);
  EXPECT_EQ(seen.size(), kNumBugs);
}

TEST(Witnesses, ToggleOnMismatchesToggleOffClean) {
  for (const Witness& w : witness_catalog()) {
    EXPECT_TRUE(witness_mismatches(w, BugConfig::only(w.bug))) << name(w.bug);
    EXPECT_FALSE(witness_mismatches(w, BugConfig{})) << name(w.bug);
  }
}

// Each witness isolates its own bug: other toggles leave it clean.
TEST(Witnesses, OtherTogglesStayClean) {
  for (const Witness& w : witness_catalog()) {
    for (Bug other : all_bugs()) {
      if (other == w.bug) continue;
      // Both SUB flag bugs share the borrow-and-sign-change witness input.
      const bool sub_pair = (w.bug == Bug::kCarrySub && other == Bug::kOverflowSub) ||
                            (w.bug == Bug::kOverflowSub && other == Bug::kCarrySub);
      if (sub_pair) continue;
      EXPECT_FALSE(witness_mismatches(w, BugConfig::only(other))) << name(w.bug) << " with " << name(other);
    }
  }
}

TEST(Witnesses, FenceRestoresCoherence) {
  EXPECT_TRUE(run_input(cache_witness_with_fence(), BugConfig::only(Bug::kCacheIncoherence)).mismatches.empty());
}

TEST(Witnesses, ShippedFilesMatchCatalog) {
  const std::filesystem::path dir = MRVFUZZ_SOURCE_DIR "/corpus/witnesses";
  for (const Witness& w : witness_catalog()) {
    ASSERT_TRUE(std::filesystem::exists(dir / w.file)) << w.file;
    EXPECT_EQ(read_file(dir / w.file), witness_file_bytes(w)) << w.file;
  }
}
