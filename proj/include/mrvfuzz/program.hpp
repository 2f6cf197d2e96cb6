#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrvfuzz/isa.hpp"

namespace mrvfuzz {

inline constexpr std::size_t kTiCount = 20;

/// A fuzzing input: a fixed configuration preamble (CIs) followed by the
/// mutable test instructions (TIs).
struct Program {
  std::vector<uint32_t> ci_words;
  std::vector<uint32_t> ti_words;
  uint32_t entry_pc = isa::layout::kCiBase;
  uint32_t ti_base = isa::layout::kTiBase;

  /// Address of the halt sentinel that follows the last TI.
  uint32_t halt_pc() const {
    return ti_base + static_cast<uint32_t>(4 * ti_words.size());
  }
  bool is_ti_pc(uint32_t pc) const { return pc >= ti_base && pc < halt_pc(); }

  friend bool operator==(const Program&, const Program&) = default;
};

using MemoryImage = std::vector<uint8_t>;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Clears x1..x31, sets the stack pointer and jumps to the TI region.
std::vector<uint32_t> standard_ci_preamble();
/// Skip-and-continue trap handler placed at the trap vector.
std::span<const uint32_t> trap_handler_words();

/// Program with the standard preamble and the given TIs.
Program make_program(std::vector<uint32_t> ti_words);

/// Flat 64 KiB image: handler stub, CIs, TIs and the halt sentinel.
/// Throws FormatError when the CI or TI region overflows.
MemoryImage build_image(const Program& p);

// THZI corpus/replay file: "THZI", version 0x01, ci_count (u16 LE),
// ti_count (u16 LE), then ci_count + ti_count u32 LE words.
std::vector<uint8_t> serialize_thzi(const Program& p);
Program parse_thzi(std::span<const uint8_t> bytes);

void write_thzi(const std::filesystem::path& path, const Program& p);
Program read_thzi(const std::filesystem::path& path);

/// FNV-1a 64-bit, used for stable content hashes in reports.
uint64_t fnv1a64(std::span<const uint8_t> bytes);
std::string hash_hex(uint64_t h);
std::string program_hash(const Program& p);

std::vector<uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mrvfuzz
