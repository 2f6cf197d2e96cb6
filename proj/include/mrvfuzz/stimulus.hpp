#pragma once

// Seed generation, the twelve TI mutations, and coverage-feedback
// retention. Mutations only ever touch TIs; CIs pass through unchanged.

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrvfuzz/coverage.hpp"
#include "mrvfuzz/isa.hpp"
#include "mrvfuzz/program.hpp"
#include "mrvfuzz/rng.hpp"
#include "mrvfuzz/weights.hpp"

namespace mrvfuzz {

enum class MutationId : uint8_t {
  M0,   // flip 1 bit
  M1,   // flip 2 adjacent bits
  M2,   // flip 4 adjacent bits
  M3,   // flip 1 byte
  M4,   // flip 2 adjacent bytes
  M5,   // +/- [0,35] on 1 byte
  M6,   // +/- [0,35] on 2 bytes
  M7,   // +/- [0,35] on 4 bytes
  M8,   // overwrite a random byte
  M9,   // replace with NOP
  M10,  // clone another TI
  M11,  // randomize opcode bits
};

std::string name(MutationId m);
std::optional<MutationId> parse_mutation(std::string_view s);
/// M0..M7 never alter opcode bits; M8..M11 may alter any bits.
constexpr bool is_data_only(MutationId m) { return static_cast<int>(m) <= 7; }

/// Opcode-side bits for M11. Legal words: the complement of their data
/// mask. Illegal words have no decoded fields, so the positions that
/// decide legality (opcode, funct3, funct7) are used instead. The length
/// bits [1:0] are excluded in both cases.
uint32_t m11_opcode_bits(uint32_t word);
inline constexpr uint32_t kLegalityBits = 0xFE00707Fu;
inline constexpr uint32_t kLengthBits = 0x3u;

// Parameterized word-level mutations (the random choices made explicit).
// Bit/byte windows are masked to data bits; the add/sub window works on
// the data bits of the selected bytes packed into one integer.
uint32_t flip_bits(uint32_t word, unsigned pos, unsigned count);
uint32_t flip_bytes(uint32_t word, unsigned first_byte, unsigned count);
uint32_t add_to_window(uint32_t word, unsigned first_byte, unsigned count, int delta);
uint32_t set_byte(uint32_t word, unsigned byte, uint8_t value);
uint32_t randomize_opcode(uint32_t word, uint32_t random_bits);

/// Packs the bits of `v` selected by `mask` into the low bits (and back).
uint32_t pext(uint32_t v, uint32_t mask);
uint32_t pdep(uint32_t v, uint32_t mask);

/// Returns a copy of `p` with TI `ti_index` mutated by `m`.
Program mutate(const Program& p, std::size_t ti_index, MutationId m, Rng& rng);

/// A legal word for `m` with random operands. Register and immediate
/// fields are uniform over their ranges, except branch/jump offsets
/// (word-aligned, within +/-64 bytes) and CSR numbers (drawn from the
/// CSR map).
uint32_t random_instruction(isa::Mnemonic m, Rng& rng);

struct SeedResult {
  Program program;
  bool fell_back = false;  // no instruction had w_I = 1
};

/// TIs 0..9 uniform over safe_ops, TIs 10..19 uniform over {i : w_I(i)=1}.
SeedResult gen_seed(Rng& rng, const WeightTable& weights);

struct ImChoice {
  std::size_t ti_index;
  MutationId mutation;
  bool fell_back;  // no selected mutation for this TI's instruction
};

ImChoice select_im(const Program& p, const WeightTable& weights, Rng& rng);

struct CorpusEntry {
  Program program;
  std::string hash;
  uint64_t id = 0;
  bool seed = false;
};

/// FIFO corpus with coverage-feedback retention.
class Corpus {
 public:
  /// Seeds are always kept.
  const CorpusEntry& add_seed(Program p);
  /// Keeps the candidate iff `delta` is non-empty; returns the new entry.
  const CorpusEntry* retain(const Program& candidate, const std::vector<uint32_t>& delta);

  std::size_t size() const { return entries_.size(); }
  const CorpusEntry& at(std::size_t i) const { return entries_.at(i); }
  const std::deque<CorpusEntry>& entries() const { return entries_; }

  /// Pops the oldest entry not yet dequeued; nullptr when the queue is
  /// drained. Entries stay in entries() for persistence.
  const CorpusEntry* dequeue();
  std::size_t pending() const { return queue_.size(); }

 private:
  const CorpusEntry& append(Program p, bool seed);
  std::deque<CorpusEntry> entries_;
  std::deque<std::size_t> queue_;
};

}  // namespace mrvfuzz
