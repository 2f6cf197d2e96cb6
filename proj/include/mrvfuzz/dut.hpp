#pragma once

// The design under test: a cycle-stepped 3-stage MiniRV pipeline
// (fetch / decode+execute / writeback) with WB->DX register forwarding,
// a 16 x 16-byte direct-mapped I-cache behind a 4-state controller FSM,
// and a CSR/privilege unit. Every injected bug is a BugConfig toggle;
// with all toggles off the committed stream equals the GRM's.

#include <array>
#include <bitset>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mrvfuzz/coverage.hpp"
#include "mrvfuzz/grm.hpp"
#include "mrvfuzz/program.hpp"
#include "mrvfuzz/trace.hpp"

namespace mrvfuzz {

enum class Bug : uint8_t {
  kFenceFields,       // FENCE.I legality depends on imm/rs1
  kExcType,           // fetch access fault reported with a fixed wrong cause
  kIllegalAccept,     // reserved opcode 0x5B/funct3=0 executes as ADD
  kCacheIncoherence,  // stores do not invalidate the I-cache
  kCarrySub,          // SUB carry = raw adder carry-out instead of borrow
  kPrivEpcr,          // EPCR accessible from user mode
  kEearRo,            // CSR writes to EEAR are dropped
  kGpr0Fwd,           // WB->DX forwarding does not exclude x0
  kMacOverflow,       // MAC overflow ignores multiply overflow
  kOverflowSub,       // SUB overflow uses the ADD formula
  kInstretEbreak,     // EBREAK does not increment INSTRET
  kCsB1,              // case-study controller: debug read without password
  kCsB2,              // case-study controller: vld uses flush|en
};
inline constexpr std::size_t kNumBugs = 13;
inline constexpr std::size_t kNumDutBugs = 11;

std::string_view name(Bug b);
std::optional<Bug> parse_bug(std::string_view s);
std::span<const Bug> all_bugs();

class BugConfig {
 public:
  BugConfig() = default;
  BugConfig(std::initializer_list<Bug> bugs) {
    for (Bug b : bugs) enable(b);
  }
  static BugConfig only(Bug b) { return BugConfig{b}; }

  bool on(Bug b) const { return bits_.test(static_cast<std::size_t>(b)); }
  void enable(Bug b, bool v = true) { bits_.set(static_cast<std::size_t>(b), v); }
  bool none() const { return bits_.none(); }

  /// Comma-separated toggle names ("" for none); throws std::invalid_argument.
  static BugConfig parse(std::string_view list);
  std::string to_string() const;

  friend bool operator==(const BugConfig&, const BugConfig&) = default;

 private:
  std::bitset<kNumBugs> bits_;
};

/// The DUT's probe manifest (fixed; docs/dut_manifest.txt is its text form).
std::shared_ptr<const cov::CoverageManifest> dut_manifest();

enum class CacheState : uint8_t { kIdle, kLookup, kRefill, kFlush };
std::string_view name(CacheState s);

inline constexpr uint32_t kCacheLines = 16;
inline constexpr uint32_t kLineBytes = 16;
inline constexpr uint32_t kRefillCycles = 4;
inline constexpr uint64_t kDefaultMaxCycles = 2000;

struct DutLimits {
  uint64_t max_cycles = kDefaultMaxCycles;
  /// Retired-instruction budget; equal to the GRM's so both traces stop
  /// at the same point on non-halting inputs.
  uint64_t max_commits = UINT64_MAX;
  uint32_t halt_pc = 0;
};

class ManifestMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Dut {
 public:
  /// Cold caches, empty pipeline, architectural state as grm_reset.
  /// Throws ImageError on an oversized image and ManifestMismatch when
  /// `manifest` is not the DUT's own manifest.
  Dut(const MemoryImage& image, uint32_t entry_pc, BugConfig bugs,
      std::shared_ptr<const cov::CoverageManifest> manifest, DutLimits limits = {});

  /// Advances one clock. Returns the instruction retired by writeback, if any.
  std::optional<CommitEvent> cycle();

  bool finished() const { return finished_; }
  uint64_t max_cycles() const { return limits_.max_cycles; }
  std::optional<RunStatus> stop_reason() const { return stop_; }
  uint64_t cycles() const { return cycle_count_; }

  const cov::CoverageMap& coverage() const { return cov_; }
  cov::CoverageMap take_coverage() { return std::move(cov_); }

  // Inspection for tests and replay output.
  const std::array<uint32_t, 32>& gpr() const { return gpr_; }
  uint32_t flags() const { return flags_; }
  uint64_t instret() const { return instret_; }
  PrivMode mode() const;
  CacheState cache_state() const { return ctrl_; }
  bool line_valid(uint32_t index) const { return lines_.at(index).valid; }
  const MemoryImage& memory() const { return mem_; }

  class Probes;  // probe ids paired with dut_manifest()

 private:
  struct FetchSlot {
    bool valid = false;
    bool fault = false;
    uint32_t pc = 0;
    uint32_t word = 0;
  };
  struct WbSlot {
    bool valid = false;
    bool has_rd = false;
    uint8_t rd = 0;
    uint32_t value = 0;
    CommitEvent ev;
  };
  struct Line {
    bool valid = false;
    uint32_t tag = 0;
    std::array<uint32_t, kLineBytes / 4> data{};
  };
  struct Redirect {
    uint32_t target;
    bool flush;
  };

  std::optional<Redirect> execute(const FetchSlot& in, WbSlot& out);
  void fetch(const std::optional<Redirect>& redirect);
  void sample_coverage();

  uint32_t load(uint32_t addr, int size) const;
  void store(uint32_t addr, int size, uint32_t v);

  BugConfig bugs_;
  DutLimits limits_;
  std::shared_ptr<const Probes> probes_;
  cov::CoverageMap cov_;

  // architectural
  std::array<uint32_t, 32> gpr_{};
  uint32_t status_ = isa::csr::kStatusMachine;
  uint32_t epcr_ = 0, estatus_ = 0, eear_ = 0, flags_ = 0;
  uint64_t instret_ = 0;
  MemoryImage mem_;

  // pipeline
  FetchSlot ifq_;
  WbSlot wb_;
  uint32_t fetch_pc_ = 0;
  uint64_t executed_ = 0;
  std::optional<RunStatus> stop_;
  bool finished_ = false;
  uint64_t cycle_count_ = 0;

  // I-cache
  std::array<Line, kCacheLines> lines_{};
  CacheState ctrl_ = CacheState::kIdle;
  uint32_t refill_count_ = 0;
  uint32_t refill_addr_ = 0;
  bool flush_pending_ = false;
  bool cache_en_ = false;

  // toggle history
  std::array<cov::ToggleTracker, 6> toggles_;
  uint32_t prev_status_ = isa::csr::kStatusMachine;
};

struct DutRunResult {
  ArchTrace trace;
  cov::CoverageMap coverage;
  uint64_t cycles = 0;
  bool hang = false;  // cycle budget ran out before a stop condition
};

/// Runs until halt, commit budget, double fault, or the cycle budget
/// (reported as kBudget: a hang).
DutRunResult dut_run(Dut& dut);

DutRunResult run_dut(const Program& p, BugConfig bugs, uint64_t max_cycles, uint64_t max_commits);

}  // namespace mrvfuzz
