#include <gtest/gtest.h>

#include "mrvfuzz/grm.hpp"
#include "mrvfuzz/rng.hpp"
#include "mrvfuzz/stimulus.hpp"

using namespace mrvfuzz;
using isa::Fields;
using isa::Mnemonic;

namespace {

MemoryImage image_at(uint32_t base, std::vector<uint32_t> words) {
  MemoryImage img(isa::layout::kMemSize, 0);
  for (uint32_t w : words) {
    for (int i = 0; i < 4; ++i) img[base + i] = static_cast<uint8_t>(w >> (8 * i));
    base += 4;
  }
  return img;
}

uint32_t enc(Mnemonic m, Fields f = {}) { return isa::encode(m, f); }

std::optional<uint32_t> flags_write(const CommitEvent& e) {
  for (const CsrWrite& w : e.csr_writes) {
    if (w.addr == isa::csr::kFlags) return w.value;
  }
  return std::nullopt;
}

}  // namespace

TEST(Grm, ResetExamples) {
  const ArchState s = grm_reset(MemoryImage{}, 0);
  EXPECT_EQ(s.pc, 0u);
  for (uint32_t r : s.gpr) EXPECT_EQ(r, 0u);
  EXPECT_EQ(s.instret, 0u);
  EXPECT_EQ(s.mem.size(), isa::layout::kMemSize);
  EXPECT_THROW(grm_reset(MemoryImage(isa::layout::kMemSize + 1, 0), 0), ImageError);

  ArchState n = grm_reset(image_at(0x400, {isa::kNop}), 0x400);
  const CommitEvent e = grm_step(n);
  EXPECT_EQ(e.pc, 0x400u);
  EXPECT_EQ(e.instr_word, isa::kNop);
  EXPECT_FALSE(e.exception);
  EXPECT_EQ(n.pc, 0x404u);
}

TEST(Grm, StepExamples) {
  ArchState s = grm_reset(image_at(0x400, {enc(Mnemonic::ADDI, {.rd = 1, .imm = 5})}), 0x400);
  const CommitEvent e = grm_step(s);
  ASSERT_EQ(e.gpr_writes.size(), 1u);
  EXPECT_EQ(e.gpr_writes[0], (GprWrite{1, 5}));
  EXPECT_FALSE(e.exception);

  // User-mode write to EPCR is illegal and leaves EPCR to the trap logic.
  ArchState u = grm_reset(image_at(0x400, {enc(Mnemonic::CSRRW, {.rs1 = 1, .csr = isa::csr::kEpcr})}), 0x400);
  u.status = 0;
  u.gpr[1] = 0x1234;
  const CommitEvent t = grm_step(u);
  ASSERT_TRUE(t.exception);
  EXPECT_EQ(*t.exception, isa::cause::kIllegal);
  EXPECT_EQ(u.epcr, 0x400u);  // faulting pc, not the written value
  EXPECT_EQ(u.pc, isa::layout::kTrapVector);
}

TEST(Grm, SubOverflowExample) {
  ArchState s = grm_reset(image_at(0x400, {enc(Mnemonic::SUB, {.rd = 3, .rs1 = 1, .rs2 = 2})}), 0x400);
  s.gpr[1] = 0x80000000u;
  s.gpr[2] = 1;
  const CommitEvent e = grm_step(s);
  ASSERT_TRUE(flags_write(e));
  EXPECT_TRUE(*flags_write(e) & isa::csr::kFlagOverflow);
  EXPECT_EQ(s.gpr[3], 0x7FFFFFFFu);
}

// Flags of ADD/SUB against 64-bit arithmetic on sampled operand pairs.
TEST(Grm, AddSubFlagsMatchWideArithmetic) {
  Rng rng(3);
  const uint32_t edges[] = {0, 1, 2, 0x7FFFFFFF, 0x80000000u, 0x80000001u, 0xFFFFFFFFu, 0xFFFFFFFEu};
  for (int k = 0; k < 20000; ++k) {
    const uint32_t a = k < 64 ? edges[k % 8] : rng.next32();
    const uint32_t b = k < 64 ? edges[k / 8] : rng.next32();
    for (Mnemonic m : {Mnemonic::ADD, Mnemonic::SUB}) {
      ArchState s = grm_reset(image_at(0x400, {enc(m, {.rd = 3, .rs1 = 1, .rs2 = 2})}), 0x400);
      s.gpr[1] = a;
      s.gpr[2] = b;
      const CommitEvent e = grm_step(s);
      const bool sub = m == Mnemonic::SUB;
      const int64_t wide = sub ? int64_t{int32_t(a)} - int32_t(b) : int64_t{int32_t(a)} + int32_t(b);
      const bool overflow = wide < INT32_MIN || wide > INT32_MAX;
      const bool carry = sub ? a < b : (uint64_t{a} + b) >> 32;
      const uint32_t expect = (carry ? isa::csr::kFlagCarry : 0) | (overflow ? isa::csr::kFlagOverflow : 0);
      ASSERT_TRUE(flags_write(e));
      ASSERT_EQ(*flags_write(e), expect) << isa::name(m) << " " << a << " " << b;
      ASSERT_EQ(s.gpr[3], static_cast<uint32_t>(wide));
    }
  }
}

TEST(Grm, RunExamples) {
  const std::vector<uint32_t> prog = {isa::kNop, isa::kNop, isa::kNop, isa::kHaltWord};
  ArchState s = grm_reset(image_at(0x400, prog), 0x400);
  const ArchTrace t = grm_run(s, 100, 0x40C);
  EXPECT_EQ(t.events.size(), 3u);
  EXPECT_EQ(t.status, RunStatus::kHalted);
  EXPECT_EQ(s.instret, t.events.size());

  ArchState b = grm_reset(image_at(0x400, prog), 0x400);
  const ArchTrace tb = grm_run(b, 1, 0x40C);
  EXPECT_EQ(tb.events.size(), 1u);
  EXPECT_EQ(tb.status, RunStatus::kBudget);
}

// An illegal TI traps; the handler advances EPCR past it and returns.
TEST(Grm, TrapThroughHandler) {
  const Program p = make_program({0x00000000u, enc(Mnemonic::ADDI, {.rd = 1, .imm = 9})});
  ArchState s = grm_reset(build_image(p), p.entry_pc);
  const ArchTrace t = grm_run(s, 200, p.halt_pc());
  ASSERT_EQ(t.status, RunStatus::kHalted);
  const std::size_t ci = p.ci_words.size();
  ASSERT_EQ(t.events.size(), ci + 1 + 4 + 1);
  const CommitEvent& trap = t.events[ci];
  EXPECT_EQ(trap.pc, 0x400u);
  EXPECT_EQ(trap.exception, isa::cause::kIllegal);
  const uint32_t handler_pcs[] = {0x100, 0x104, 0x108, 0x10C};
  for (int k = 0; k < 4; ++k) EXPECT_EQ(t.events[ci + 1 + k].pc, handler_pcs[k]);
  EXPECT_EQ(t.events[ci + 1].gpr_writes, (std::vector<GprWrite>{{31, 0x400}}));
  EXPECT_EQ(t.events[ci + 2].gpr_writes, (std::vector<GprWrite>{{31, 0x404}}));
  EXPECT_EQ(t.events[ci + 5].pc, 0x404u);
  EXPECT_EQ(s.gpr[1], 9u);
}

TEST(Grm, TrapInsideHandlerIsDoubleFault) {
  ArchState s = grm_reset(MemoryImage(isa::layout::kMemSize, 0), isa::layout::kTrapVector);
  const ArchTrace t = grm_run(s, 10, 0x400);
  EXPECT_EQ(t.status, RunStatus::kDoubleFault);
  EXPECT_EQ(t.events.size(), 1u);
}

TEST(Grm, DeterministicAndX0Hardwired) {
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const Program p = gen_seed(rng, WeightTable::uniform()).program;
    ArchState a = grm_reset(build_image(p), p.entry_pc);
    ArchState b = grm_reset(build_image(p), p.entry_pc);
    const ArchTrace ta = grm_run(a, 117, p.halt_pc());
    const ArchTrace tb = grm_run(b, 117, p.halt_pc());
    ASSERT_EQ(ta.events, tb.events);
    EXPECT_EQ(a.gpr[0], 0u);
    EXPECT_EQ(a.instret, ta.events.size());
    for (const CommitEvent& e : ta.events) {
      for (const GprWrite& w : e.gpr_writes) EXPECT_NE(w.index, 0);
    }
  }
}

TEST(Grm, InstretCountsEbreak) {
  const Program p = make_program({enc(Mnemonic::EBREAK), enc(Mnemonic::CSRRS, {.rd = 1, .csr = isa::csr::kInstret})});
  ArchState s = grm_reset(build_image(p), p.entry_pc);
  const ArchTrace t = grm_run(s, 200, p.halt_pc());
  ASSERT_EQ(t.status, RunStatus::kHalted);
  // CIs, EBREAK, four handler instructions, then the CSR read sees all of them.
  EXPECT_EQ(s.gpr[1], p.ci_words.size() + 1 + 4);
}
