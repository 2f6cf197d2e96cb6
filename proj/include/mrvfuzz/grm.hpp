#pragma once

// Golden reference model: a plain architectural interpreter of MiniRV.
// It has no caches, no pipeline and no injected bugs; one call to
// grm_step retires exactly one instruction.

#include <array>
#include <cstdint>
#include <stdexcept>

#include "mrvfuzz/program.hpp"
#include "mrvfuzz/trace.hpp"

namespace mrvfuzz {

enum class PrivMode : uint8_t { kUser, kMachine };

struct ArchState {
  uint32_t pc = 0;
  std::array<uint32_t, 32> gpr{};
  uint32_t status = isa::csr::kStatusMachine;
  uint32_t epcr = 0;
  uint32_t estatus = 0;
  uint32_t eear = 0;
  uint32_t flags = 0;
  uint64_t instret = 0;
  MemoryImage mem;

  PrivMode mode() const {
    return (status & isa::csr::kStatusMachine) ? PrivMode::kMachine : PrivMode::kUser;
  }
};

class ImageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws ImageError when the image exceeds 64 KiB. Shorter images are
/// zero-padded.
ArchState grm_reset(const MemoryImage& image, uint32_t entry_pc);

CommitEvent grm_step(ArchState& s);

ArchTrace grm_run(ArchState& s, uint64_t max_instructions, uint32_t halt_pc);

}  // namespace mrvfuzz
