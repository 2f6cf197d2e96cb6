#include <gtest/gtest.h>

#include <set>

#include "../common/asm_reference.hpp"
#include "mrvfuzz/isa.hpp"
#include "mrvfuzz/rng.hpp"
#include "mrvfuzz/stimulus.hpp"

using namespace mrvfuzz;
using isa::Fields;
using isa::Mnemonic;

TEST(Isa, EncodeExamples) {
  EXPECT_EQ(isa::encode(Mnemonic::ADDI, Fields{}), 0x00000013u);
  EXPECT_EQ(isa::encode(Mnemonic::ADD, Fields{.rd = 1, .rs1 = 2, .rs2 = 3}), 0x003100B3u);
  const uint32_t lui = isa::encode(Mnemonic::LUI, Fields{.rd = 5, .imm = 0});
  EXPECT_EQ((lui >> 7) & 31, 5u);
  EXPECT_EQ(lui & 0xFFFFF000u, 0u);
  EXPECT_EQ(isa::encode("ADD", Fields{.rd = 1, .rs1 = 2, .rs2 = 3}), 0x003100B3u);
}

TEST(Isa, MatchesAssemblerReference) {
  const auto lines = asmref::load(MRVFUZZ_SOURCE_DIR "/tools/oracle/assembled_reference.txt");
  int compared = 0;
  for (const auto& l : lines) {
    if (!l.mnemonic) continue;
    EXPECT_EQ(isa::encode(*l.mnemonic, l.fields), l.word) << l.text;
    ++compared;
  }
  EXPECT_GE(compared, 20);
}

TEST(Isa, EncodeRejectsBadFields) {
  EXPECT_THROW(isa::encode(Mnemonic::ADD, Fields{.rd = 32}), isa::EncodeError);
  EXPECT_THROW(isa::encode(Mnemonic::ADDI, Fields{.imm = 2048}), isa::EncodeError);
  EXPECT_THROW(isa::encode(Mnemonic::ADD, Fields{.imm = 1}), isa::EncodeError);  // unused field
  EXPECT_THROW(isa::encode(Mnemonic::BEQ, Fields{.imm = 3}), isa::EncodeError);  // odd offset
  EXPECT_THROW(isa::encode("NOPE", Fields{}), isa::EncodeError);
}

TEST(Isa, DecodeExamples) {
  const auto nop = isa::decode(0x00000013);
  ASSERT_TRUE(nop);
  EXPECT_EQ(nop->mnemonic, Mnemonic::ADDI);
  EXPECT_EQ(nop->fields, Fields{});
  EXPECT_FALSE(isa::decode(0x00000000));

  const uint32_t fence = isa::encode(Mnemonic::FENCE_I, Fields{.imm = 5});
  const auto f = isa::decode(fence);
  ASSERT_TRUE(f);
  EXPECT_EQ(f->mnemonic, Mnemonic::FENCE_I);
  EXPECT_EQ(f->fields.imm, 5);
  EXPECT_EQ(f->data_bits, isa::data_mask(fence));
  EXPECT_EQ((fence & f->data_bits) >> 20, 5u);
}

TEST(Isa, DataMaskByFormat) {
  const uint32_t add = isa::encode(Mnemonic::ADD, Fields{.rd = 1, .rs1 = 2, .rs2 = 3});
  EXPECT_EQ(isa::data_mask(add), 0x00000F80u | 0x000F8000u | 0x01F00000u);
  const uint32_t jal = isa::encode(Mnemonic::JAL, Fields{.rd = 1, .imm = 8});
  EXPECT_EQ(isa::data_mask(jal), 0xFFFFFF80u);
  EXPECT_EQ(isa::data_mask(0x00000000u), 0xFFFFFFFFu);
}

TEST(Isa, RoundtripAndMaskPartition) {
  Rng rng(1);
  for (Mnemonic m : isa::legal_ops()) {
    for (int k = 0; k < 500; ++k) {
      const uint32_t w = random_instruction(m, rng);
      const auto in = isa::decode(w);
      ASSERT_TRUE(in) << isa::name(m);
      EXPECT_EQ(in->mnemonic, m);
      EXPECT_EQ(isa::encode(m, in->fields), w) << isa::disassemble(w);
      EXPECT_EQ(isa::data_mask(w) ^ isa::opcode_mask(w), 0xFFFFFFFFu);
      EXPECT_EQ(in->data_bits, isa::data_mask(w));
      EXPECT_EQ(in->data_bits ^ in->opcode_bits, 0xFFFFFFFFu);
    }
  }
}

// decode is total and every word it accepts is the unique encoding of its fields.
TEST(Isa, DecodeTotalOnRandomWords) {
  Rng rng(2);
  int legal = 0;
  for (int k = 0; k < 200000; ++k) {
    const uint32_t w = rng.next32();
    const auto in = isa::decode(w);
    if (!in) {
      EXPECT_EQ(isa::data_mask(w), 0xFFFFFFFFu);
      continue;
    }
    ++legal;
    EXPECT_EQ(isa::encode(in->mnemonic, in->fields), w) << std::hex << w;
  }
  EXPECT_GT(legal, 0);
}

TEST(Isa, NamesAndCsrMap) {
  for (Mnemonic m : isa::legal_ops()) EXPECT_EQ(isa::parse_mnemonic(isa::name(m)), m);
  EXPECT_EQ(isa::legal_ops().size(), isa::kNumMnemonics);
  std::set<uint16_t> addrs;
  for (const isa::CsrRule& r : isa::csr_map()) EXPECT_TRUE(addrs.insert(r.addr).second);
  ASSERT_NE(isa::find_csr(isa::csr::kInstret), nullptr);
  EXPECT_TRUE(isa::find_csr(isa::csr::kInstret)->read_only);
  EXPECT_EQ(isa::find_csr(0x7FF), nullptr);
}

TEST(Isa, Disassemble) {
  EXPECT_EQ(isa::disassemble(0x003100B3), "ADD x1, x2, x3");
  EXPECT_EQ(isa::disassemble(0xFFC12583), "LW x11, -4(x2)");
  EXPECT_EQ(isa::disassemble(0x00C683A3), "SB x12, 7(x13)");
  EXPECT_EQ(isa::disassemble(0), "<illegal 0x00000000>");
}
