#pragma once

// Fuzzes the standalone controller under different feedback metrics and
// checks which metrics can see the corrupted logic in blocks 4 and 6.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrvfuzz/controller.hpp"
#include "mrvfuzz/coverage.hpp"

namespace mrvfuzz {

inline constexpr uint64_t kCaseStudyMaxCycles = 10000;
inline constexpr std::size_t kCaseStudySeqLen = 8;

struct CaseStudyRun {
  std::string feedback;  // metric list used for retention
  uint64_t inputs = 0;
  uint64_t cycles = 0;
  std::optional<uint64_t> b1_cycle;  // cycle counter when first flagged
  std::optional<uint64_t> b2_cycle;
  uint32_t expr_hit_b4 = 0, expr_universe_b4 = 0;
  uint32_t expr_hit_b6 = 0, expr_universe_b6 = 0;
  // Cycle at which blocks 4 and 6 both reached full expression coverage.
  std::optional<uint64_t> expr_full_cycle;
  std::size_t corpus = 0;
};

struct CaseStudyReport {
  std::vector<CaseStudyRun> runs;  // full metrics, mux only, ctrlreg only
  uint32_t mux_points_b4 = 0, mux_points_b6 = 0;
  uint32_t ctrlreg_points_b4 = 0, ctrlreg_points_b6 = 0;
  uint32_t ctrlreg_universe = 0;
  uint32_t mux_universe = 0;
};

/// One campaign: 8-tuple input sequences, a corpus seeded with random
/// sequences, mutants retained on new points of `feedback`, each sequence
/// run on the golden controller and on the CS_B1+CS_B2 variant.
CaseStudyRun casestudy_campaign(cov::MetricSet feedback, uint64_t seed, uint64_t max_cycles = kCaseStudyMaxCycles);

CaseStudyReport run_casestudy(uint64_t seed, uint64_t max_cycles = kCaseStudyMaxCycles);

nlohmann::json to_json(const CaseStudyReport& r);
std::string format_casestudy(const CaseStudyReport& r);

}  // namespace mrvfuzz
