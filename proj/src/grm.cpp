#include "mrvfuzz/grm.hpp"

namespace mrvfuzz {
namespace {

using isa::Mnemonic;
namespace csr = isa::csr;
namespace cause = isa::cause;
namespace layout = isa::layout;

constexpr uint32_t kAddrMask = layout::kMemSize - 1;

uint32_t load(const ArchState& s, uint32_t addr, int size) {
  uint32_t v = 0;
  for (int i = 0; i < size; ++i) v |= uint32_t{s.mem[(addr + i) & kAddrMask]} << (8 * i);
  return v;
}

void store(ArchState& s, uint32_t addr, int size, uint32_t v) {
  for (int i = 0; i < size; ++i) s.mem[(addr + i) & kAddrMask] = static_cast<uint8_t>(v >> (8 * i));
}

uint32_t read_csr(const ArchState& s, uint16_t addr) {
  switch (addr) {
    case csr::kStatus: return s.status;
    case csr::kEpcr: return s.epcr;
    case csr::kEstatus: return s.estatus;
    case csr::kEear: return s.eear;
    case csr::kFlags: return s.flags;
    case csr::kInstret: return static_cast<uint32_t>(s.instret);
    default: return 0;
  }
}

void write_csr(ArchState& s, uint16_t addr, uint32_t v) {
  switch (addr) {
    case csr::kStatus: s.status = v; break;
    case csr::kEpcr: s.epcr = v; break;
    case csr::kEstatus: s.estatus = v; break;
    case csr::kEear: s.eear = v; break;
    case csr::kFlags: s.flags = v; break;
    default: break;
  }
}

class Stepper {
 public:
  Stepper(ArchState& s, CommitEvent& ev) : s_(s), ev_(ev) {}

  void trap(uint32_t code, uint32_t eear) {
    ev_.exception = code;
    ev_.gpr_writes.clear();
    ev_.mem_writes.clear();
    const uint32_t old_status = s_.status;
    s_.epcr = ev_.pc;
    s_.estatus = old_status;
    s_.eear = eear;
    s_.status = csr::kStatusMachine;
    ev_.csr_writes = {{csr::kStatus, s_.status},
                      {csr::kEpcr, s_.epcr},
                      {csr::kEstatus, s_.estatus},
                      {csr::kEear, s_.eear}};
    s_.pc = layout::kTrapVector;
  }

  void write_rd(uint8_t rd, uint32_t v) {
    if (rd == 0) return;
    s_.gpr[rd] = v;
    ev_.gpr_writes.push_back({rd, v});
  }

  void set_flags(uint32_t v) {
    s_.flags = v;
    ev_.csr_writes.push_back({csr::kFlags, v});
  }

  // Redirects to target, or raises a misaligned-fetch trap.
  void jump(uint32_t target) {
    if (target & 3u) {
      trap(cause::kMisalignedFetch, ev_.pc);
      return;
    }
    s_.pc = target;
  }

  void execute(const isa::Instruction& in) {
    const isa::Fields& f = in.fields;
    const uint32_t a = s_.gpr[f.rs1];
    const uint32_t b = s_.gpr[f.rs2];
    const auto imm = static_cast<uint32_t>(f.imm);
    const uint32_t pc = ev_.pc;
    s_.pc = pc + 4;

    switch (in.mnemonic) {
      case Mnemonic::ADD: add(f.rd, a, b); break;
      case Mnemonic::ADDI: add(f.rd, a, imm); break;
      case Mnemonic::SUB: {
        const uint32_t r = a - b;
        const uint32_t carry = a < b ? csr::kFlagCarry : 0;
        const uint32_t ovf = (((a ^ b) & (a ^ r)) >> 31) ? csr::kFlagOverflow : 0;
        write_rd(f.rd, r);
        set_flags(carry | ovf);
        break;
      }
      case Mnemonic::MAC: {
        const uint32_t acc = s_.gpr[f.rd];
        const int64_t exact = int64_t{static_cast<int32_t>(acc)} +
                              int64_t{static_cast<int32_t>(a)} * int64_t{static_cast<int32_t>(b)};
        const uint32_t r = acc + a * b;
        const bool ovf = exact < INT32_MIN || exact > INT32_MAX;
        write_rd(f.rd, r);
        set_flags((s_.flags & csr::kFlagCarry) | (ovf ? csr::kFlagOverflow : 0));
        break;
      }
      case Mnemonic::SLT: write_rd(f.rd, static_cast<int32_t>(a) < static_cast<int32_t>(b)); break;
      case Mnemonic::SLTU: write_rd(f.rd, a < b); break;
      case Mnemonic::SLTI: write_rd(f.rd, static_cast<int32_t>(a) < f.imm); break;
      case Mnemonic::AND: write_rd(f.rd, a & b); break;
      case Mnemonic::OR: write_rd(f.rd, a | b); break;
      case Mnemonic::XOR: write_rd(f.rd, a ^ b); break;
      case Mnemonic::ANDI: write_rd(f.rd, a & imm); break;
      case Mnemonic::ORI: write_rd(f.rd, a | imm); break;
      case Mnemonic::XORI: write_rd(f.rd, a ^ imm); break;
      case Mnemonic::SLL: write_rd(f.rd, a << (b & 31)); break;
      case Mnemonic::SRL: write_rd(f.rd, a >> (b & 31)); break;
      case Mnemonic::SRA: write_rd(f.rd, static_cast<uint32_t>(static_cast<int32_t>(a) >> (b & 31))); break;
      case Mnemonic::SLLI: write_rd(f.rd, a << imm); break;
      case Mnemonic::SRLI: write_rd(f.rd, a >> imm); break;
      case Mnemonic::SRAI: write_rd(f.rd, static_cast<uint32_t>(static_cast<int32_t>(a) >> imm)); break;
      case Mnemonic::LUI: write_rd(f.rd, imm << 12); break;
      case Mnemonic::AUIPC: write_rd(f.rd, pc + (imm << 12)); break;

      case Mnemonic::LW: do_load(f.rd, a + imm, 4, false); break;
      case Mnemonic::LH: do_load(f.rd, a + imm, 2, true); break;
      case Mnemonic::LHU: do_load(f.rd, a + imm, 2, false); break;
      case Mnemonic::LB: do_load(f.rd, a + imm, 1, true); break;
      case Mnemonic::LBU: do_load(f.rd, a + imm, 1, false); break;
      case Mnemonic::SW: do_store(a + imm, 4, b); break;
      case Mnemonic::SH: do_store(a + imm, 2, b & 0xFFFF); break;
      case Mnemonic::SB: do_store(a + imm, 1, b & 0xFF); break;

      case Mnemonic::BEQ: branch(a == b, pc + imm); break;
      case Mnemonic::BNE: branch(a != b, pc + imm); break;
      case Mnemonic::BLT: branch(static_cast<int32_t>(a) < static_cast<int32_t>(b), pc + imm); break;
      case Mnemonic::BGE: branch(static_cast<int32_t>(a) >= static_cast<int32_t>(b), pc + imm); break;
      case Mnemonic::BLTU: branch(a < b, pc + imm); break;
      case Mnemonic::BGEU: branch(a >= b, pc + imm); break;
      case Mnemonic::JAL: {
        const uint32_t target = pc + imm;
        if (target & 3u) return trap(cause::kMisalignedFetch, pc);
        write_rd(f.rd, pc + 4);
        s_.pc = target;
        break;
      }
      case Mnemonic::JALR: {
        const uint32_t target = (a + imm) & ~1u;
        if (target & 3u) return trap(cause::kMisalignedFetch, pc);
        write_rd(f.rd, pc + 4);
        s_.pc = target;
        break;
      }

      case Mnemonic::FENCE_I: break;
      case Mnemonic::ECALL:
        trap(s_.mode() == PrivMode::kUser ? cause::kEcallUser : cause::kEcallMachine, pc);
        break;
      case Mnemonic::EBREAK: trap(cause::kBreakpoint, pc); break;
      case Mnemonic::MRET:
        if (s_.mode() == PrivMode::kUser) return trap(cause::kIllegal, pc);
        if (s_.epcr & 3u) return trap(cause::kMisalignedFetch, pc);
        s_.pc = s_.epcr;
        s_.status = s_.estatus & csr::kStatusMachine;
        ev_.csr_writes.push_back({csr::kStatus, s_.status});
        break;
      case Mnemonic::CSRRW:
      case Mnemonic::CSRRS:
      case Mnemonic::CSRRC: csr_op(in.mnemonic, f.rd, f.rs1, f.csr, a); break;
    }
  }

 private:
  void add(uint8_t rd, uint32_t a, uint32_t b) {
    const uint32_t r = a + b;
    const uint32_t carry = r < a ? csr::kFlagCarry : 0;
    const uint32_t ovf = (((a ^ r) & (b ^ r)) >> 31) ? csr::kFlagOverflow : 0;
    write_rd(rd, r);
    set_flags(carry | ovf);
  }

  void branch(bool taken, uint32_t target) {
    if (taken) jump(target);
  }

  void do_load(uint8_t rd, uint32_t addr, int size, bool sign) {
    if (addr % size) return trap(cause::kMisalignedLoad, addr);
    uint32_t v = load(s_, addr, size);
    if (sign && size < 4) {
      const uint32_t sbit = 1u << (8 * size - 1);
      v = (v ^ sbit) - sbit;
    }
    write_rd(rd, v);
  }

  void do_store(uint32_t addr, int size, uint32_t v) {
    if (addr % size) return trap(cause::kMisalignedStore, addr);
    store(s_, addr, size, v);
    ev_.mem_writes.push_back({addr & kAddrMask, static_cast<uint8_t>(size), v});
  }

  void csr_op(Mnemonic m, uint8_t rd, uint8_t rs1, uint16_t addr, uint32_t src) {
    const isa::CsrRule* rule = isa::find_csr(addr);
    const bool writes = m == Mnemonic::CSRRW || rs1 != 0;
    if (rule == nullptr || (rule->machine_only && s_.mode() == PrivMode::kUser) ||
        (rule->read_only && writes)) {
      return trap(cause::kIllegal, ev_.pc);
    }
    const uint32_t old = read_csr(s_, addr);
    if (writes) {
      uint32_t next = m == Mnemonic::CSRRW ? src : m == Mnemonic::CSRRS ? (old | src) : (old & ~src);
      next &= rule->write_mask;
      write_csr(s_, addr, next);
      ev_.csr_writes.push_back({addr, next});
    }
    write_rd(rd, old);
  }

  ArchState& s_;
  CommitEvent& ev_;
};

}  // namespace

ArchState grm_reset(const MemoryImage& image, uint32_t entry_pc) {
  if (image.size() > layout::kMemSize) throw ImageError("memory image exceeds 64 KiB");
  ArchState s;
  s.mem.assign(layout::kMemSize, 0);
  std::copy(image.begin(), image.end(), s.mem.begin());
  s.pc = entry_pc;
  return s;
}

CommitEvent grm_step(ArchState& s) {
  CommitEvent ev;
  ev.seq = s.instret;
  ev.pc = s.pc;
  Stepper step(s, ev);
  if (s.pc >= layout::kNoFetchBase) {
    step.trap(cause::kFetchAccess, s.pc);
  } else {
    ev.instr_word = load(s, s.pc, 4);
    if (const auto in = isa::decode(ev.instr_word)) {
      step.execute(*in);
    } else {
      step.trap(cause::kIllegal, s.pc);
    }
  }
  ++s.instret;
  return ev;
}

ArchTrace grm_run(ArchState& s, uint64_t max_instructions, uint32_t halt_pc) {
  ArchTrace t;
  for (;;) {
    if (s.pc == halt_pc) {
      t.status = RunStatus::kHalted;
      break;
    }
    if (t.events.size() >= max_instructions) {
      t.status = RunStatus::kBudget;
      break;
    }
    t.events.push_back(grm_step(s));
    const CommitEvent& ev = t.events.back();
    if (ev.exception && layout::in_handler(ev.pc)) {
      t.status = RunStatus::kDoubleFault;
      break;
    }
  }
  return t;
}

}  // namespace mrvfuzz
