#include "mrvfuzz/stimulus.hpp"

#include <bit>

namespace mrvfuzz {
namespace {

using isa::Mnemonic;

constexpr uint32_t window_mask(unsigned first_byte, unsigned count) {
  const uint64_t ones = (uint64_t{1} << (8 * count)) - 1;
  return static_cast<uint32_t>(ones << (8 * first_byte));
}

uint8_t reg(Rng& rng) { return static_cast<uint8_t>(rng.below(32)); }

}  // namespace

std::string name(MutationId m) { return "M" + std::to_string(static_cast<int>(m)); }

std::optional<MutationId> parse_mutation(std::string_view s) {
  for (int i = 0; i < static_cast<int>(kNumMutations); ++i) {
    if (s == "M" + std::to_string(i)) return static_cast<MutationId>(i);
  }
  return std::nullopt;
}

uint32_t pext(uint32_t v, uint32_t mask) {
  uint32_t out = 0;
  for (uint32_t bit = 1; mask; bit <<= 1) {
    const uint32_t low = mask & (0 - mask);
    if (v & low) out |= bit;
    mask &= mask - 1;
  }
  return out;
}

uint32_t pdep(uint32_t v, uint32_t mask) {
  uint32_t out = 0;
  for (uint32_t bit = 1; mask; bit <<= 1) {
    const uint32_t low = mask & (0 - mask);
    if (v & bit) out |= low;
    mask &= mask - 1;
  }
  return out;
}

uint32_t m11_opcode_bits(uint32_t word) {
  // Bits [1:0] mark a 32-bit encoding and stay 11.
  return (isa::decode(word) ? isa::opcode_mask(word) : kLegalityBits) & ~kLengthBits;
}

uint32_t flip_bits(uint32_t word, unsigned pos, unsigned count) {
  const uint64_t window = ((uint64_t{1} << count) - 1) << pos;
  return word ^ (static_cast<uint32_t>(window) & isa::data_mask(word));
}

uint32_t flip_bytes(uint32_t word, unsigned first_byte, unsigned count) {
  return word ^ (window_mask(first_byte, count) & isa::data_mask(word));
}

uint32_t add_to_window(uint32_t word, unsigned first_byte, unsigned count, int delta) {
  const uint32_t mask = window_mask(first_byte, count) & isa::data_mask(word);
  const int width = std::popcount(mask);
  if (width == 0) return word;
  uint32_t v = pext(word, mask) + static_cast<uint32_t>(delta);
  if (width < 32) v &= (1u << width) - 1;
  return (word & ~mask) | pdep(v, mask);
}

uint32_t set_byte(uint32_t word, unsigned byte, uint8_t value) {
  const unsigned shift = 8 * byte;
  return (word & ~(0xFFu << shift)) | (uint32_t{value} << shift);
}

uint32_t randomize_opcode(uint32_t word, uint32_t random_bits) {
  const uint32_t ob = m11_opcode_bits(word);
  return (word & ~ob) | (random_bits & ob);
}

Program mutate(const Program& p, std::size_t ti_index, MutationId m, Rng& rng) {
  Program out = p;
  uint32_t& w = out.ti_words.at(ti_index);
  const uint32_t mask = isa::data_mask(w);

  auto random_data_bit = [&]() -> std::optional<unsigned> {
    if (mask == 0) return std::nullopt;
    auto k = static_cast<int>(rng.below(static_cast<uint64_t>(std::popcount(mask))));
    uint32_t rest = mask;
    while (k-- > 0) rest &= rest - 1;
    return static_cast<unsigned>(std::countr_zero(rest));
  };
  auto add_window = [&](unsigned count) {
    const auto first = static_cast<unsigned>(rng.below(5 - count));
    const auto magnitude = static_cast<int>(rng.range(0, 35));
    w = add_to_window(w, first, count, rng.coin() ? magnitude : -magnitude);
  };

  switch (m) {
    case MutationId::M0:
    case MutationId::M1:
    case MutationId::M2: {
      const unsigned count = m == MutationId::M0 ? 1 : m == MutationId::M1 ? 2 : 4;
      if (const auto pos = random_data_bit()) w = flip_bits(w, *pos, count);
      break;
    }
    case MutationId::M3: w = flip_bytes(w, static_cast<unsigned>(rng.below(4)), 1); break;
    case MutationId::M4: w = flip_bytes(w, static_cast<unsigned>(rng.below(3)), 2); break;
    case MutationId::M5: add_window(1); break;
    case MutationId::M6: add_window(2); break;
    case MutationId::M7: add_window(4); break;
    case MutationId::M8: {
      const auto byte = static_cast<unsigned>(rng.below(4));
      w = set_byte(w, byte, static_cast<uint8_t>(rng.below(256)));
      break;
    }
    case MutationId::M9: w = isa::kNop; break;
    case MutationId::M10: {
      const std::size_t n = p.ti_words.size();
      if (n > 1) {
        std::size_t other = rng.below(n - 1);
        if (other >= ti_index) ++other;
        w = p.ti_words[other];
      }
      break;
    }
    case MutationId::M11: w = randomize_opcode(w, rng.next32()); break;
  }
  return out;
}

uint32_t random_instruction(Mnemonic m, Rng& rng) {
  isa::Fields f;
  switch (m) {
    case Mnemonic::ECALL:
    case Mnemonic::EBREAK:
    case Mnemonic::MRET:
      break;
    case Mnemonic::CSRRW:
    case Mnemonic::CSRRS:
    case Mnemonic::CSRRC: {
      const auto csrs = isa::csr_map();
      f.rd = reg(rng);
      // Half of the set/clear forms are the pure read (rs1 = x0).
      f.rs1 = m != Mnemonic::CSRRW && rng.coin() ? 0 : reg(rng);
      f.csr = csrs[rng.below(csrs.size())].addr;
      break;
    }
    case Mnemonic::SLLI:
    case Mnemonic::SRLI:
    case Mnemonic::SRAI:
      f.rd = reg(rng);
      f.rs1 = reg(rng);
      f.imm = static_cast<int32_t>(rng.below(32));
      break;
    default:
      switch (isa::format_of(m)) {
        case isa::Format::R:
          f.rd = reg(rng);
          f.rs1 = reg(rng);
          f.rs2 = reg(rng);
          break;
        case isa::Format::I:
          f.rd = reg(rng);
          f.rs1 = reg(rng);
          f.imm = static_cast<int32_t>(rng.range(-2048, 2047));
          break;
        case isa::Format::S:
          f.rs1 = reg(rng);
          f.rs2 = reg(rng);
          f.imm = static_cast<int32_t>(rng.range(-2048, 2047));
          break;
        case isa::Format::B:
          f.rs1 = reg(rng);
          f.rs2 = reg(rng);
          f.imm = static_cast<int32_t>(4 * rng.range(-16, 16));
          break;
        case isa::Format::U:
          f.rd = reg(rng);
          f.imm = static_cast<int32_t>(rng.below(1u << 20));
          break;
        case isa::Format::J:
          f.rd = reg(rng);
          f.imm = static_cast<int32_t>(4 * rng.range(-16, 16));
          break;
        case isa::Format::SYS:
          break;
      }
  }
  return isa::encode(m, f);
}

SeedResult gen_seed(Rng& rng, const WeightTable& weights) {
  SeedResult r;
  std::vector<uint32_t> ti;
  ti.reserve(kTiCount);
  const auto safe = isa::safe_ops();
  for (std::size_t i = 0; i < kTiCount / 2; ++i) ti.push_back(random_instruction(safe[rng.below(safe.size())], rng));

  std::vector<Mnemonic> pool = weights.instructions();
  if (pool.empty()) {
    r.fell_back = true;
    const auto legal = isa::legal_ops();
    pool.assign(legal.begin(), legal.end());
  }
  for (std::size_t i = kTiCount / 2; i < kTiCount; ++i) ti.push_back(random_instruction(pool[rng.below(pool.size())], rng));
  r.program = make_program(std::move(ti));
  return r;
}

ImChoice select_im(const Program& p, const WeightTable& weights, Rng& rng) {
  ImChoice c{};
  c.ti_index = rng.below(p.ti_words.size());
  std::vector<std::size_t> allowed;
  if (const auto in = isa::decode(p.ti_words[c.ti_index])) {
    for (std::size_t m = 0; m < kNumMutations; ++m) {
      if (weights.w(in->mnemonic, m)) allowed.push_back(m);
    }
  }
  if (allowed.empty()) {
    c.fell_back = true;
    c.mutation = static_cast<MutationId>(rng.below(kNumMutations));
  } else {
    c.mutation = static_cast<MutationId>(allowed[rng.below(allowed.size())]);
  }
  return c;
}

const CorpusEntry& Corpus::append(Program p, bool seed) {
  CorpusEntry e;
  e.hash = program_hash(p);
  e.program = std::move(p);
  e.id = entries_.size();
  e.seed = seed;
  entries_.push_back(std::move(e));
  queue_.push_back(entries_.size() - 1);
  return entries_.back();
}

const CorpusEntry& Corpus::add_seed(Program p) { return append(std::move(p), true); }

const CorpusEntry* Corpus::retain(const Program& candidate, const std::vector<uint32_t>& delta) {
  if (delta.empty()) return nullptr;
  return &append(candidate, false);
}

const CorpusEntry* Corpus::dequeue() {
  if (queue_.empty()) return nullptr;
  const std::size_t i = queue_.front();
  queue_.pop_front();
  return &entries_[i];
}

}  // namespace mrvfuzz
