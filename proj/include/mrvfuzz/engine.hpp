#pragma once

// Campaign orchestration: lockstep DUT/GRM runs, per-instruction trace
// diffing, corpus and global coverage management, and report output.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mrvfuzz/config.hpp"
#include "mrvfuzz/coverage.hpp"
#include "mrvfuzz/dut.hpp"
#include "mrvfuzz/grm.hpp"
#include "mrvfuzz/stimulus.hpp"
#include "mrvfuzz/trace.hpp"
#include "mrvfuzz/weights.hpp"

namespace mrvfuzz {

enum class DiffField : uint8_t { kPc, kInstrWord, kGprWrite, kCsrWrite, kMemWrite, kException, kTraceLength };
std::string_view name(DiffField f);

struct Mismatch {
  uint64_t event_index = 0;
  DiffField field = DiffField::kPc;
  nlohmann::json dut_value;
  nlohmann::json grm_value;
};

/// First divergence between two commit traces, if any. Events are zipped
/// in order; write lists are compared as sorted sets; an unequal length
/// with an equal common prefix is a trace-length mismatch at the shorter
/// trace's end.
std::vector<Mismatch> diff_traces(const ArchTrace& dut, const ArchTrace& grm);

/// GRM instruction budget for a program: every CI and TI plus handler slack.
inline constexpr uint64_t kHandlerSlack = 64;
inline uint64_t instruction_budget(const Program& p) {
  return p.ci_words.size() + p.ti_words.size() + kHandlerSlack;
}

struct RunOutcome {
  ArchTrace dut;
  ArchTrace grm;
  cov::CoverageMap coverage;
  std::vector<Mismatch> mismatches;
  RunStatus status = RunStatus::kBudget;  // DUT side
  bool hang = false;                      // DUT ran out of cycles
  uint64_t retired_tis = 0;               // DUT commits whose pc lies in the TI region
  uint64_t cycles = 0;
};

RunOutcome run_input(const Program& p, BugConfig bugs, uint64_t max_cycles = kDefaultMaxCycles);

struct MismatchReport {
  std::string program_path;
  std::string program_hash;
  uint64_t input_index = 0;
  Mismatch mismatch;
  std::string bugs;
  uint64_t rng_seed = 0;
  uint64_t instructions = 0;  // retired TIs so far, this input included
};

nlohmann::json to_json(const MismatchReport& r);

struct HangReport {
  std::string program_hash;
  uint64_t input_index = 0;
  uint64_t cycles = 0;
};

struct CampaignReport {
  Config config;
  uint64_t inputs = 0;        // mutants or random inputs, seeds excluded
  uint64_t runs = 0;          // every executed program, seeds included
  uint64_t instructions = 0;  // retired TIs over all runs
  uint64_t seed_rounds = 1;  // seed batches run, the initial one included
  uint64_t seed_fallbacks = 0;
  uint64_t select_fallbacks = 0;
  std::vector<std::pair<uint64_t, uint64_t>> curve;  // (instructions, six-metric hits)
  std::vector<MismatchReport> mismatches;
  std::vector<HangReport> hangs;
  std::vector<Program> crash_programs;  // parallel to mismatches
  double wall_seconds = 0;
  cov::CoverageMap coverage;
  Corpus corpus;

  std::optional<uint64_t> first_mismatch_instructions() const;
  /// Hits over the six default feedback metrics.
  uint64_t combined_hits() const;
};

/// Runs the campaign described by `config` with the given weights (pass
/// WeightTable::uniform() for an unoptimized campaign).
CampaignReport fuzz_loop(const Config& config, const WeightTable& weights);

nlohmann::json campaign_json(const CampaignReport& r);

/// campaign.json, mismatches.jsonl, corpus/, crashes/, coverage.json.
void write_campaign(const CampaignReport& r, const std::filesystem::path& dir);

/// Side-by-side commit listing up to and including the first mismatch.
std::string format_replay(const RunOutcome& o);

}  // namespace mrvfuzz
