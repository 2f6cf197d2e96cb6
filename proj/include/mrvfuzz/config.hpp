#pragma once

// Line-oriented key=value campaign configuration. '#' starts a comment.
// Keys (defaults in parentheses):
//   bugs.enabled            comma list of bug toggles ("")
//   fuzz.lanes              worker threads per batch (1)
//   fuzz.max_inputs         mutants (or random inputs) to run, seeds excluded (10000)
//   fuzz.max_instructions   retired-TI budget, 0 = unlimited (0)
//   fuzz.max_seconds        wall-clock budget, 0 = unlimited (0)
//   fuzz.mutants_per_entry  mutants per dequeued corpus entry (50)
//   fuzz.seeds              seed programs per seed round (10)
//   fuzz.reseed_every       dequeued entries between seed rounds, 0 = only
//                           when the queue drains (1)
//   fuzz.mode               feedback | random (feedback)
//   fuzz.weights            weights.json path, "" = uniform ("")
//   fuzz.stop_on_mismatch   end the campaign at the first mismatch (false)
//   dut.max_cycles          per-input cycle budget (2000)
//   feedback.metrics        retention metrics (statement,branch,condition,expression,toggle,fsm)
//   profile.runs_per_pair   profiling programs per (instruction, mutation) pair (5)
//   rng.seed                (42)
//   paths.out               output directory ("out"; THEHUZZ_OUT overrides)

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mrvfuzz/coverage.hpp"
#include "mrvfuzz/dut.hpp"

namespace mrvfuzz {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FuzzMode : uint8_t { kFeedback, kRandom };

struct Config {
  BugConfig bugs;
  unsigned lanes = 1;
  uint64_t max_inputs = 10000;
  uint64_t max_instructions = 0;
  double max_seconds = 0;
  uint32_t mutants_per_entry = 50;
  uint32_t seeds = 10;
  uint32_t reseed_every = 1;
  FuzzMode mode = FuzzMode::kFeedback;
  std::string weights;
  bool stop_on_mismatch = false;
  uint64_t max_cycles = kDefaultMaxCycles;
  cov::MetricSet metrics = cov::default_feedback_metrics();
  uint32_t runs_per_pair = 5;
  uint64_t seed = 42;
  std::string out = "out";

  /// Applies one key=value assignment; throws ConfigError.
  void set(std::string_view key, std::string_view value);
  /// Canonical text form (every key, parseable by parse_config).
  std::string to_text() const;
  nlohmann::json to_json() const;
};

Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

/// paths.out, overridden by the THEHUZZ_OUT environment variable.
std::filesystem::path output_dir(const Config& c);

}  // namespace mrvfuzz
