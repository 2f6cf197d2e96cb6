#include <gtest/gtest.h>

#include <array>
#include <bit>

#include "mrvfuzz/program.hpp"
#include "mrvfuzz/rng.hpp"
#include "mrvfuzz/stimulus.hpp"

using namespace mrvfuzz;
using isa::Fields;
using isa::Mnemonic;

namespace {

uint32_t random_legal(Rng& rng) {
  const auto ops = isa::legal_ops();
  return random_instruction(ops[rng.below(ops.size())], rng);
}

Program random_program(Rng& rng) {
  std::vector<uint32_t> ti;
  for (std::size_t i = 0; i < kTiCount; ++i) ti.push_back(random_legal(rng));
  return make_program(ti);
}

uint32_t byte_mask(unsigned first, unsigned count) {
  uint32_t m = 0;
  for (unsigned b = first; b < first + count; ++b) m |= 0xFFu << (8 * b);
  return m;
}

// Some window of `count` bytes holds the whole change and its packed data
// bits moved by at most 35 (mod the window's width).
bool within_add_window(uint32_t before, uint32_t after, unsigned count) {
  const uint32_t data = isa::data_mask(before);
  for (unsigned first = 0; first + count <= 4; ++first) {
    const uint32_t win = byte_mask(first, count) & data;
    if ((before & ~win) != (after & ~win)) continue;
    const unsigned bits = std::popcount(win);
    const uint64_t mod = uint64_t{1} << bits;
    const uint64_t up = (uint64_t{pext(after, win)} + mod - pext(before, win)) % mod;
    const uint64_t down = (uint64_t{pext(before, win)} + mod - pext(after, win)) % mod;
    if (up <= 35 || down <= 35) return true;
  }
  return false;
}

}  // namespace

TEST(Stimulus, WordMutationExamples) {
  EXPECT_EQ(flip_bits(0x00000013, 7, 1), 0x00000093u);
  EXPECT_EQ(add_to_window(isa::encode(Mnemonic::LUI, Fields{}), 3, 1, 35), 0x23000037u);
  EXPECT_EQ(add_to_window(isa::encode(Mnemonic::LUI, Fields{}), 3, 1, -1), 0xFF000037u);
  Rng rng(12);
  Program p = random_program(rng);
  const Program m = mutate(p, 4, MutationId::M9, rng);
  EXPECT_EQ(m.ti_words[4], isa::kNop);
}

TEST(Stimulus, PextPdepInverse) {
  Rng rng(13);
  for (int k = 0; k < 10000; ++k) {
    const uint32_t v = rng.next32(), mask = rng.next32();
    EXPECT_EQ(pdep(pext(v, mask), mask), v & mask);
  }
}

TEST(Stimulus, M11Bits) {
  const uint32_t add = isa::encode(Mnemonic::ADD, Fields{.rd = 1, .rs1 = 2, .rs2 = 3});
  EXPECT_EQ(m11_opcode_bits(add), ~isa::data_mask(add) & ~kLengthBits);
  EXPECT_EQ(m11_opcode_bits(0), kLegalityBits & ~kLengthBits);
  EXPECT_EQ(randomize_opcode(add, 0xFFFFFFFF) & kLengthBits, add & kLengthBits);
}

// The mutation contract over 10,000 random (word, mutation) pairs.
TEST(Stimulus, MutationContract) {
  Rng rng(14);
  for (int k = 0; k < 10000; ++k) {
    const Program p = random_program(rng);
    const std::size_t ti = rng.below(kTiCount);
    const auto m = static_cast<MutationId>(rng.below(kNumMutations));
    const Program c = mutate(p, ti, m, rng);
    const uint32_t before = p.ti_words[ti], after = c.ti_words[ti];
    ASSERT_EQ(c.ci_words, p.ci_words);
    for (std::size_t i = 0; i < kTiCount; ++i) {
      if (i != ti) ASSERT_EQ(c.ti_words[i], p.ti_words[i]);
    }
    const uint32_t op = isa::opcode_mask(before);
    if (is_data_only(m)) ASSERT_EQ(after & op, before & op) << name(m) << std::hex << " " << before;
    if (m == MutationId::M11) ASSERT_EQ(after & ~op, before & ~op) << std::hex << before;
    if (m >= MutationId::M5 && m <= MutationId::M7) {
      const unsigned count = m == MutationId::M5 ? 1 : m == MutationId::M6 ? 2 : 4;
      ASSERT_TRUE(within_add_window(before, after, count)) << name(m) << std::hex << " " << before << " " << after;
    }
  }
}

TEST(Stimulus, MutationNames) {
  for (std::size_t m = 0; m < kNumMutations; ++m) {
    EXPECT_EQ(parse_mutation(name(static_cast<MutationId>(m))), static_cast<MutationId>(m));
  }
  EXPECT_FALSE(parse_mutation("M12"));
}

TEST(Stimulus, GenSeedGoldenProgram) {
  Rng rng(42);
  const SeedResult s = gen_seed(rng, WeightTable::uniform());
  EXPECT_FALSE(s.fell_back);
  EXPECT_EQ(s.program, read_thzi(MRVFUZZ_TEST_DATA "/seed42_uniform.thzi"));
  const Program next = gen_seed(rng, WeightTable::uniform()).program;
  EXPECT_NE(next, s.program);
}

TEST(Stimulus, GenSeedSlots) {
  Rng rng(15);
  const WeightTable add_only = WeightTable::from_pairs({pair_index(Mnemonic::ADD, 0)});
  for (int k = 0; k < 100; ++k) {
    const SeedResult s = gen_seed(rng, add_only);
    ASSERT_EQ(s.program.ti_words.size(), kTiCount);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_TRUE(isa::is_safe(isa::decode(s.program.ti_words[i])->mnemonic));
    for (std::size_t i = 10; i < kTiCount; ++i) EXPECT_EQ(isa::decode(s.program.ti_words[i])->mnemonic, Mnemonic::ADD);
  }
  EXPECT_TRUE(gen_seed(rng, WeightTable{}).fell_back);
}

TEST(Stimulus, SelectImRespectsWeights) {
  Rng rng(16);
  const Program adds = make_program(std::vector<uint32_t>(kTiCount, isa::encode(Mnemonic::ADD, Fields{.rd = 1})));
  const WeightTable only_m0 = WeightTable::from_pairs({pair_index(Mnemonic::ADD, 0)});
  for (int k = 0; k < 1000; ++k) {
    const ImChoice c = select_im(adds, only_m0, rng);
    EXPECT_EQ(c.mutation, MutationId::M0);
    EXPECT_FALSE(c.fell_back);
    EXPECT_LT(c.ti_index, kTiCount);
  }

  std::array<int, kNumMutations> uniform{};
  std::array<int, kTiCount> slots{};
  for (int k = 0; k < 24000; ++k) {
    const ImChoice c = select_im(adds, WeightTable::uniform(), rng);
    ++uniform[static_cast<std::size_t>(c.mutation)];
    ++slots[c.ti_index];
  }
  for (int n : uniform) EXPECT_NEAR(n, 2000, 300);
  for (int n : slots) EXPECT_NEAR(n, 1200, 250);

  const Program illegal = make_program(std::vector<uint32_t>(kTiCount, 0));
  std::array<int, kNumMutations> fallback{};
  for (int k = 0; k < 12000; ++k) {
    const ImChoice c = select_im(illegal, only_m0, rng);
    EXPECT_TRUE(c.fell_back);
    ++fallback[static_cast<std::size_t>(c.mutation)];
  }
  for (int n : fallback) EXPECT_NEAR(n, 1000, 200);
}

TEST(Stimulus, CorpusRetentionAndFifo) {
  Rng rng(17);
  Corpus c;
  const Program a = random_program(rng), b = random_program(rng), d = random_program(rng);
  c.add_seed(a);
  EXPECT_EQ(c.retain(b, {}), nullptr);
  ASSERT_NE(c.retain(b, {3}), nullptr);
  c.retain(d, {4, 5});
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c.pending(), 3u);
  EXPECT_EQ(c.dequeue()->program, a);
  EXPECT_EQ(c.dequeue()->program, b);
  EXPECT_EQ(c.dequeue()->program, d);
  EXPECT_EQ(c.dequeue(), nullptr);
  EXPECT_EQ(c.size(), 3u);
  EXPECT_TRUE(c.at(0).seed);
  EXPECT_FALSE(c.at(1).seed);
}

TEST(Stimulus, RandomInstructionOperandRanges) {
  Rng rng(18);
  for (int k = 0; k < 5000; ++k) {
    const uint32_t b = random_instruction(Mnemonic::BNE, rng);
    const int32_t off = isa::decode(b)->fields.imm;
    EXPECT_EQ(off % 4, 0);
    EXPECT_LE(std::abs(off), 64);
    const auto csr = isa::decode(random_instruction(Mnemonic::CSRRS, rng))->fields.csr;
    EXPECT_NE(isa::find_csr(csr), nullptr);
  }
}
