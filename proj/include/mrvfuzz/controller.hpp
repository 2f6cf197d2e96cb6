#pragma once

// Standalone cache-flush / debug-read controller used for the coverage
// metric comparison. Blocks:
//   1  `when (flush & en)` branch and its 2:1 mux
//   2  condition over (flush, en)
//   3  next-state arms and the D_READ select mux
//   4  sel1 = debug_en & pass & !ipass        (CS_B1 corrupts this)
//   5  3-bit state register (tri-state) and its FSM
//   6  vld = debug_en | (flush & en)          (CS_B2 corrupts this)
//   7  the five input registers and vld

#include <cstdint>
#include <memory>
#include <vector>

#include "mrvfuzz/coverage.hpp"
#include "mrvfuzz/dut.hpp"

namespace mrvfuzz {

/// One input tuple: bit4 flush, bit3 en, bit2 debug_en, bit1 pass, bit0 ipass.
struct CtrlInput {
  bool flush = false, en = false, debug_en = false, pass = false, ipass = false;

  static CtrlInput from_bits(uint32_t v) {
    return {bool(v & 16), bool(v & 8), bool(v & 4), bool(v & 2), bool(v & 1)};
  }
  uint32_t bits() const {
    return uint32_t{flush} << 4 | uint32_t{en} << 3 | uint32_t{debug_en} << 2 | uint32_t{pass} << 1 |
           uint32_t{ipass};
  }
  friend bool operator==(const CtrlInput&, const CtrlInput&) = default;
};

enum class CtrlState : uint8_t { kIdle = 0, kFlush = 1, kDRead = 2 };

struct CtrlOutput {
  CtrlState state = CtrlState::kIdle;
  bool vld = false;
  friend bool operator==(const CtrlOutput&, const CtrlOutput&) = default;
};

std::shared_ptr<const cov::CoverageManifest> controller_manifest();

struct ControllerRun {
  std::vector<CtrlOutput> outputs;  // one per cycle, after the clock edge
  cov::CoverageMap coverage;
};

/// Steps the controller from reset (state register floating) once per
/// tuple. Only the CS_B1/CS_B2 toggles of `variant` matter.
ControllerRun controller_run(const std::vector<CtrlInput>& inputs, BugConfig variant);

}  // namespace mrvfuzz
