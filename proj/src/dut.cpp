#include "mrvfuzz/dut.hpp"

#include <algorithm>
#include <climits>
#include <cstdio>

namespace mrvfuzz {
namespace {

namespace csr = isa::csr;
namespace cause = isa::cause;
namespace layout = isa::layout;
using cov::CoverageManifest;
using cov::ProbeId;

constexpr std::array<std::string_view, kNumBugs> kBugNames{
    "FENCE_FIELDS", "EXC_TYPE",     "ILLEGAL_ACCEPT", "CACHE_INCOHERENCE", "CARRY_SUB",
    "PRIV_EPCR",    "EEAR_RO",      "GPR0_FWD",       "MAC_OVERFLOW",      "OVERFLOW_SUB",
    "INSTRET_EBREAK", "CS_B1",      "CS_B2",
};

constexpr std::array<Bug, kNumBugs> kAllBugs{
    Bug::kFenceFields, Bug::kExcType,  Bug::kIllegalAccept, Bug::kCacheIncoherence, Bug::kCarrySub,
    Bug::kPrivEpcr,    Bug::kEearRo,   Bug::kGpr0Fwd,       Bug::kMacOverflow,      Bug::kOverflowSub,
    Bug::kInstretEbreak, Bug::kCsB1,   Bug::kCsB2,
};

constexpr uint32_t kAddrMask = layout::kMemSize - 1;

// ---------------------------------------------------------------------------
// Decoder. Written against the encoding tables directly rather than reusing
// isa::decode so that decoder bugs stay visible to the differential check.

enum class Op : uint8_t {
  kAdd, kSub, kSlt, kSltu, kAnd, kOr, kXor, kSll, kSrl, kSra,
  kLui, kAuipc, kLoad, kStore, kBranch, kJal, kJalr,
  kFence, kEcall, kEbreak, kMret, kCsr, kMac, kIllegal,
};

constexpr uint32_t kArmIllegal = isa::kNumMnemonics;
constexpr uint32_t kArmReserved = isa::kNumMnemonics + 1;
constexpr uint32_t kNumArms = isa::kNumMnemonics + 2;

struct Uop {
  Op op = Op::kIllegal;
  uint32_t arm = kArmIllegal;
  bool imm_operand = false;  // ALU second operand is imm
  bool sets_flags = false;
  uint8_t rd = 0, rs1 = 0, rs2 = 0;
  uint32_t f3 = 0;
  uint32_t imm = 0;
  uint16_t csr = 0;
  bool reads_rs1 = false, reads_rs2 = false, reads_rd = false;
};

uint32_t imm_i(uint32_t w) { return static_cast<uint32_t>(static_cast<int32_t>(w) >> 20); }
uint32_t imm_s(uint32_t w) {
  return static_cast<uint32_t>(static_cast<int32_t>(w & 0xFE000000u) >> 20) | ((w >> 7) & 0x1Fu);
}
uint32_t imm_b(uint32_t w) {
  return static_cast<uint32_t>(static_cast<int32_t>(w & 0x80000000u) >> 19) | ((w << 4) & 0x800u) |
         ((w >> 20) & 0x7E0u) | ((w >> 7) & 0x1Eu);
}
uint32_t imm_j(uint32_t w) {
  return static_cast<uint32_t>(static_cast<int32_t>(w & 0x80000000u) >> 11) | (w & 0xFF000u) |
         ((w >> 9) & 0x800u) | ((w >> 20) & 0x7FEu);
}

uint32_t arm_of(isa::Mnemonic m) { return static_cast<uint32_t>(m); }

Uop decode(uint32_t w, const BugConfig& bugs) {
  using M = isa::Mnemonic;
  Uop u;
  u.rd = (w >> 7) & 31;
  u.rs1 = (w >> 15) & 31;
  u.rs2 = (w >> 20) & 31;
  u.f3 = (w >> 12) & 7;
  const uint32_t f7 = w >> 25;
  auto set = [&u](Op op, M m) {
    u.op = op;
    u.arm = arm_of(m);
  };

  switch (w & 0x7F) {
    case 0x33: {  // register-register
      u.reads_rs1 = u.reads_rs2 = true;
      if (f7 == 0x00) {
        constexpr std::array<std::pair<Op, M>, 8> kF3{{
            {Op::kAdd, M::ADD}, {Op::kSll, M::SLL}, {Op::kSlt, M::SLT}, {Op::kSltu, M::SLTU},
            {Op::kXor, M::XOR}, {Op::kSrl, M::SRL}, {Op::kOr, M::OR},   {Op::kAnd, M::AND},
        }};
        set(kF3[u.f3].first, kF3[u.f3].second);
        u.sets_flags = u.op == Op::kAdd;
      } else if (f7 == 0x20 && u.f3 == 0) {
        set(Op::kSub, M::SUB);
        u.sets_flags = true;
      } else if (f7 == 0x20 && u.f3 == 5) {
        set(Op::kSra, M::SRA);
      }
      break;
    }
    case 0x13: {  // register-immediate
      u.reads_rs1 = true;
      u.imm_operand = true;
      u.imm = imm_i(w);
      switch (u.f3) {
        case 0: set(Op::kAdd, M::ADDI); u.sets_flags = true; break;
        case 2: set(Op::kSlt, M::SLTI); break;
        case 3: break;  // SLTIU is not part of MiniRV
        case 4: set(Op::kXor, M::XORI); break;
        case 6: set(Op::kOr, M::ORI); break;
        case 7: set(Op::kAnd, M::ANDI); break;
        case 1:
          u.imm = u.rs2;
          if (f7 == 0x00) set(Op::kSll, M::SLLI);
          break;
        case 5:
          u.imm = u.rs2;
          if (f7 == 0x00) set(Op::kSrl, M::SRLI);
          if (f7 == 0x20) set(Op::kSra, M::SRAI);
          break;
      }
      break;
    }
    case 0x37: set(Op::kLui, M::LUI); u.imm = w & 0xFFFFF000u; break;
    case 0x17: set(Op::kAuipc, M::AUIPC); u.imm = w & 0xFFFFF000u; break;
    case 0x03: {
      constexpr std::array<int, 8> kArm{static_cast<int>(M::LB), static_cast<int>(M::LH),
                                        static_cast<int>(M::LW), -1, static_cast<int>(M::LBU),
                                        static_cast<int>(M::LHU), -1, -1};
      if (kArm[u.f3] >= 0) {
        set(Op::kLoad, static_cast<M>(kArm[u.f3]));
        u.reads_rs1 = true;
        u.imm = imm_i(w);
      }
      break;
    }
    case 0x23:
      if (u.f3 <= 2) {
        set(Op::kStore, u.f3 == 0 ? M::SB : u.f3 == 1 ? M::SH : M::SW);
        u.reads_rs1 = u.reads_rs2 = true;
        u.imm = imm_s(w);
      }
      break;
    case 0x63: {
      constexpr std::array<int, 8> kArm{static_cast<int>(M::BEQ), static_cast<int>(M::BNE), -1, -1,
                                        static_cast<int>(M::BLT), static_cast<int>(M::BGE),
                                        static_cast<int>(M::BLTU), static_cast<int>(M::BGEU)};
      if (kArm[u.f3] >= 0) {
        set(Op::kBranch, static_cast<M>(kArm[u.f3]));
        u.reads_rs1 = u.reads_rs2 = true;
        u.imm = imm_b(w);
      }
      break;
    }
    case 0x6F: set(Op::kJal, M::JAL); u.imm = imm_j(w); break;
    case 0x67:
      if (u.f3 == 0) {
        set(Op::kJalr, M::JALR);
        u.reads_rs1 = true;
        u.imm = imm_i(w);
      }
      break;
    case 0x0F:
      if (u.f3 == 1) {
        u.imm = imm_i(w);
        // The accepted form ignores rd, rs1 and imm.
        if (!bugs.on(Bug::kFenceFields) || (u.rs1 == 0 && u.imm == 0)) set(Op::kFence, M::FENCE_I);
      }
      break;
    case 0x73:
      if (u.f3 == 0) {
        if (w == 0x00000073u) set(Op::kEcall, M::ECALL);
        else if (w == 0x00100073u) set(Op::kEbreak, M::EBREAK);
        else if (w == 0x30200073u) set(Op::kMret, M::MRET);
      } else if (u.f3 >= 1 && u.f3 <= 3) {
        set(Op::kCsr, u.f3 == 1 ? M::CSRRW : u.f3 == 2 ? M::CSRRS : M::CSRRC);
        u.reads_rs1 = true;
        u.csr = static_cast<uint16_t>(w >> 20);
      }
      break;
    case 0x0B:
      if (u.f3 == 0 && f7 == 0) {
        set(Op::kMac, M::MAC);
        u.reads_rs1 = u.reads_rs2 = u.reads_rd = true;
        u.sets_flags = true;
      }
      break;
    case 0x5B:
      if (u.f3 == 0 && bugs.on(Bug::kIllegalAccept)) {
        u.op = Op::kAdd;
        u.arm = kArmReserved;
        u.reads_rs1 = u.reads_rs2 = true;
        u.sets_flags = true;
      }
      break;
    default:
      break;
  }
  if (u.op == Op::kIllegal) u.arm = kArmIllegal;
  return u;
}

struct CsrDesc {
  uint16_t addr;
  bool machine_only;
  bool read_only;
  uint32_t mask;
};

constexpr std::array<CsrDesc, 6> kCsrFile{{
    {0x300, true, false, 0x1},
    {0x341, true, false, 0xFFFFFFFFu},
    {0x342, true, false, 0x1},
    {0x343, true, false, 0xFFFFFFFFu},
    {0x800, false, false, 0x3},
    {0xC02, false, true, 0},
}};

// Major opcodes whose case arm decodes further fields; each has a
// fall-through arm that ends in the illegal-instruction path.
constexpr std::array<uint32_t, 10> kSubDecoded{0x03, 0x0B, 0x0F, 0x13, 0x23, 0x33, 0x5B, 0x63, 0x67, 0x73};

const CsrDesc* csr_desc(uint16_t addr) {
  for (const CsrDesc& d : kCsrFile) {
    if (d.addr == addr) return &d;
  }
  return nullptr;
}

uint32_t bit(bool b, int pos) { return static_cast<uint32_t>(b) << pos; }
bool msb(uint32_t v) { return v >> 31; }

}  // namespace

// ---------------------------------------------------------------------------
// Probe manifest

class Dut::Probes {
 public:
  Probes() : manifest_(std::make_shared<CoverageManifest>("minirv-dut")) {
    CoverageManifest& m = *manifest_;
    for (const isa::Mnemonic mn : isa::legal_ops()) {
      arm_stmt[arm_of(mn)] = m.add_statement("dec." + std::string(isa::name(mn)), "decode");
    }
    arm_stmt[kArmIllegal] = m.add_statement("dec.illegal", "decode");
    arm_stmt[kArmReserved] = m.add_statement("dec.reserved", "decode");
    fetch_fault = m.add_statement("stmt.fetch_fault", "fetch");
    trap_entry = m.add_statement("stmt.trap_entry", "trap");
    mret_return = m.add_statement("stmt.mret_return", "trap");
    refill_done = m.add_statement("stmt.refill_done", "icache");
    flush_done = m.add_statement("stmt.flush_done", "icache");
    snoop_inval = m.add_statement("stmt.snoop_invalidate", "icache");
    halt_seen = m.add_statement("stmt.halt", "decode");
    // Major-opcode case arms of the decoder, opcode[6:2] when opcode[1:0] == 11.
    for (uint32_t k = 0; k < major_arm.size(); ++k) {
      char unit[24];
      std::snprintf(unit, sizeof unit, "dec.major_%02x", (k << 2) | 3u);
      major_arm[k] = m.add_statement(unit, "decode");
    }
    bad_length = m.add_statement("dec.bad_length", "decode");
    for (std::size_t i = 0; i < kSubDecoded.size(); ++i) {
      char unit[32];
      std::snprintf(unit, sizeof unit, "dec.major_%02x.default", kSubDecoded[i]);
      major_default[i] = m.add_statement(unit, "decode");
    }
    for (std::size_t i = 0; i < kCsrFile.size(); ++i) {
      csr_read[i] = m.add_statement("csr.read_" + std::string(isa::find_csr(kCsrFile[i].addr)->name), "csr");
    }

    for (const isa::Mnemonic mn : {isa::Mnemonic::BEQ, isa::Mnemonic::BNE, isa::Mnemonic::BLT,
                                   isa::Mnemonic::BGE, isa::Mnemonic::BLTU, isa::Mnemonic::BGEU}) {
      branch_taken[static_cast<std::size_t>(mn) - static_cast<std::size_t>(isa::Mnemonic::BEQ)] =
          m.add_branch("br." + std::string(isa::name(mn)), "execute");
    }
    icache_hit = m.add_branch("br.icache_hit", "icache");
    fetch_prot = m.add_branch("br.fetch_protected", "fetch");
    fwd1_br = m.add_branch("br.fwd_rs1", "execute");
    fwd2_br = m.add_branch("br.fwd_rs2", "execute");
    csr_write = m.add_branch("br.csr_write", "csr");
    dx_trap = m.add_branch("br.trap", "trap");

    csr_illegal = m.add_condition("cond.csr_illegal",
                                  {"csr_exists", "user_mode", "machine_only", "writes", "read_only"}, "csr");
    load_misaligned = m.add_condition("cond.load_misaligned", {"size_h", "size_w", "addr1", "addr0"}, "lsu");
    store_misaligned =
        m.add_condition("cond.store_misaligned", {"size_h", "size_w", "addr1", "addr0"}, "lsu");
    jump_misaligned = m.add_condition("cond.jump_misaligned", {"taken", "target1"}, "execute");
    mret_check = m.add_condition("cond.mret", {"user_mode", "epcr1", "epcr0"}, "trap");
    fence_fields = m.add_condition("cond.fence_fields", {"rd_zero", "rs1_zero", "imm_zero"}, "decode");
    fwd1_cond = m.add_condition("cond.fwd_rs1", {"wb_writes", "rd_match", "rd_nonzero"}, "execute");
    fwd2_cond = m.add_condition("cond.fwd_rs2", {"wb_writes", "rd_match", "rd_nonzero"}, "execute");

    add_expr = m.add_expression("expr.add_flags", {"a31", "b31", "r31"}, "alu");
    sub_expr = m.add_expression("expr.sub_flags", {"a31", "b31", "r31"}, "alu");
    sub_borrow = m.add_expression("expr.sub_borrow", {"a_ltu_b", "a31", "b31"}, "alu");
    mac_expr = m.add_expression("expr.mac_overflow", {"mul_ovf", "acc_add_ovf", "r31"}, "alu");
    slt_expr = m.add_expression("expr.slt", {"a31", "b31", "ltu"}, "alu");
    cmp_expr = m.add_expression("expr.branch_cmp", {"eq", "lt", "ltu"}, "execute");
    shift_expr = m.add_expression("expr.shift", {"amt_zero", "a31", "arith"}, "alu");

    tgl_ifq = m.add_toggle("tgl.ifq_word", 32, false, "pipeline");
    tgl_wb_value = m.add_toggle("tgl.wb_value", 32, false, "pipeline");
    tgl_wb_rd = m.add_toggle("tgl.wb_rd", 5, false, "pipeline");
    tgl_flags = m.add_toggle("tgl.flags", 2, false, "csr");
    tgl_status = m.add_toggle("tgl.status", 1, false, "csr");
    tgl_fetch_pc = m.add_toggle("tgl.fetch_pc", 16, false, "fetch");

    // IDLE LOOKUP REFILL FLUSH
    icache_fsm = m.add_fsm("fsm.icache", {"IDLE", "LOOKUP", "REFILL", "FLUSH"},
                           {{0, 0}, {0, 1}, {1, 1}, {1, 2}, {1, 3}, {1, 0}, {2, 2}, {2, 1}, {3, 1}},
                           "icache");
    priv_fsm = m.add_fsm("fsm.priv", {"USER", "MACHINE"}, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, "csr");

    fwd1_mux = m.add_mux("mux.fwd_rs1", "execute");
    fwd2_mux = m.add_mux("mux.fwd_rs2", "execute");
    ctrl_group = m.add_ctrlreg("ctrl.icache", {"flush_pending", "cache_en"}, "icache");
  }

  std::shared_ptr<const CoverageManifest> manifest() const { return manifest_; }

  std::array<ProbeId, kNumArms> arm_stmt{};
  ProbeId fetch_fault, trap_entry, mret_return, refill_done, flush_done, snoop_inval, halt_seen;
  std::array<ProbeId, 32> major_arm{};
  ProbeId bad_length;
  std::array<ProbeId, kSubDecoded.size()> major_default{};
  std::array<ProbeId, kCsrFile.size()> csr_read{};
  std::array<ProbeId, 6> branch_taken{};
  ProbeId icache_hit, fetch_prot, fwd1_br, fwd2_br, csr_write, dx_trap;
  ProbeId csr_illegal, load_misaligned, store_misaligned, jump_misaligned, mret_check, fence_fields;
  ProbeId fwd1_cond, fwd2_cond;
  ProbeId add_expr, sub_expr, sub_borrow, mac_expr, slt_expr, cmp_expr, shift_expr;
  ProbeId tgl_ifq, tgl_wb_value, tgl_wb_rd, tgl_flags, tgl_status, tgl_fetch_pc;
  ProbeId icache_fsm, priv_fsm;
  ProbeId fwd1_mux, fwd2_mux, ctrl_group;

 private:
  std::shared_ptr<CoverageManifest> manifest_;
};

namespace {
const std::shared_ptr<const Dut::Probes>& probes_singleton() {
  static const auto p = std::make_shared<const Dut::Probes>();
  return p;
}
}  // namespace

std::shared_ptr<const cov::CoverageManifest> dut_manifest() { return probes_singleton()->manifest(); }

// ---------------------------------------------------------------------------

std::string_view name(Bug b) { return kBugNames[static_cast<std::size_t>(b)]; }

std::optional<Bug> parse_bug(std::string_view s) {
  for (std::size_t i = 0; i < kNumBugs; ++i) {
    if (kBugNames[i] == s) return static_cast<Bug>(i);
  }
  return std::nullopt;
}

std::span<const Bug> all_bugs() { return kAllBugs; }

BugConfig BugConfig::parse(std::string_view list) {
  BugConfig out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    std::string_view item = list.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      const auto b = parse_bug(item);
      if (!b) throw std::invalid_argument("unknown bug toggle: " + std::string(item));
      out.enable(*b);
    }
    pos = comma + 1;
  }
  return out;
}

std::string BugConfig::to_string() const {
  std::string s;
  for (Bug b : kAllBugs) {
    if (!on(b)) continue;
    if (!s.empty()) s += ',';
    s += name(b);
  }
  return s;
}

std::string_view name(CacheState s) {
  constexpr std::array<std::string_view, 4> kNames{"IDLE", "LOOKUP", "REFILL", "FLUSH"};
  return kNames[static_cast<std::size_t>(s)];
}

// ---------------------------------------------------------------------------

Dut::Dut(const MemoryImage& image, uint32_t entry_pc, BugConfig bugs,
         std::shared_ptr<const cov::CoverageManifest> manifest, DutLimits limits)
    : bugs_(bugs),
      limits_(limits),
      probes_(probes_singleton()),
      cov_(manifest ? manifest : throw ManifestMismatch("no coverage manifest")) {
  if (manifest->id() != probes_->manifest()->id()) {
    throw ManifestMismatch("coverage manifest does not match this DUT build");
  }
  if (image.size() > layout::kMemSize) throw ImageError("memory image exceeds 64 KiB");
  mem_.assign(layout::kMemSize, 0);
  std::copy(image.begin(), image.end(), mem_.begin());
  fetch_pc_ = entry_pc;
  const Probes& p = *probes_;
  toggles_ = {cov::ToggleTracker(p.tgl_ifq, 32), cov::ToggleTracker(p.tgl_wb_value, 32),
              cov::ToggleTracker(p.tgl_wb_rd, 5),  cov::ToggleTracker(p.tgl_flags, 2),
              cov::ToggleTracker(p.tgl_status, 1, status_),
              cov::ToggleTracker(p.tgl_fetch_pc, 16, entry_pc & 0xFFFF)};
}

PrivMode Dut::mode() const { return (status_ & csr::kStatusMachine) ? PrivMode::kMachine : PrivMode::kUser; }

uint32_t Dut::load(uint32_t addr, int size) const {
  uint32_t v = 0;
  for (int i = 0; i < size; ++i) v |= uint32_t{mem_[(addr + i) & kAddrMask]} << (8 * i);
  return v;
}

void Dut::store(uint32_t addr, int size, uint32_t v) {
  for (int i = 0; i < size; ++i) mem_[(addr + i) & kAddrMask] = static_cast<uint8_t>(v >> (8 * i));
  if (bugs_.on(Bug::kCacheIncoherence)) return;
  // Snoop: drop any cached line holding a written byte.
  for (int i = 0; i < size; ++i) {
    const uint32_t a = (addr + i) & kAddrMask;
    Line& line = lines_[(a / kLineBytes) % kCacheLines];
    if (line.valid && line.tag == a / (kLineBytes * kCacheLines)) {
      line.valid = false;
      cov_.hit_statement(probes_->snoop_inval);
    }
  }
}

std::optional<Dut::Redirect> Dut::execute(const FetchSlot& in, WbSlot& out) {
  const Probes& p = *probes_;
  CommitEvent& ev = out.ev;
  ev.seq = executed_;
  ev.pc = in.pc;
  ev.instr_word = in.fault ? 0 : in.word;
  out.valid = true;

  auto trap = [&](uint32_t code, uint32_t eear) -> std::optional<Redirect> {
    cov_.hit_statement(p.trap_entry);
    cov_.hit_branch(p.dx_trap, true);
    ev.exception = code;
    ev.gpr_writes.clear();
    ev.mem_writes.clear();
    ev.csr_writes.clear();
    out.has_rd = false;
    epcr_ = in.pc;
    estatus_ = status_;
    eear_ = eear;
    status_ = csr::kStatusMachine;
    ev.csr_writes = {{csr::kStatus, status_}, {csr::kEpcr, epcr_}, {csr::kEstatus, estatus_}, {csr::kEear, eear_}};
    ++instret_;
    return Redirect{layout::kTrapVector, false};
  };

  if (in.fault) {
    cov_.hit_statement(p.fetch_fault);
    return trap(bugs_.on(Bug::kExcType) ? cause::kFetchPageFault : cause::kFetchAccess, in.pc);
  }

  const Uop u = decode(in.word, bugs_);
  if ((in.word & 3u) == 3u) {
    cov_.hit_statement(p.major_arm[(in.word >> 2) & 31u]);
  } else {
    cov_.hit_statement(p.bad_length);
  }
  cov_.hit_statement(p.arm_stmt[u.arm]);
  if (u.op == Op::kIllegal) {
    const auto it = std::find(kSubDecoded.begin(), kSubDecoded.end(), in.word & 0x7Fu);
    if (it != kSubDecoded.end()) cov_.hit_statement(p.major_default[static_cast<std::size_t>(it - kSubDecoded.begin())]);
  }
  if ((in.word & 0x707F) == 0x100F) {
    cov_.hit_vector(p.fence_fields, bit(u.rd == 0, 2) | bit(u.rs1 == 0, 1) | bit(imm_i(in.word) == 0, 0));
  }
  if (u.op == Op::kIllegal) return trap(cause::kIllegal, in.pc);

  // Operand read with WB->DX forwarding.
  auto forwards = [&](uint8_t r) {
    return wb_.valid && wb_.has_rd && wb_.rd == r && (wb_.rd != 0 || bugs_.on(Bug::kGpr0Fwd));
  };
  const bool fwd1 = forwards(u.rs1);
  const bool fwd2 = forwards(u.rs2);
  const bool fwd_rd = forwards(u.rd);
  auto fwd_inputs = [&](uint8_t r) {
    const bool writes = wb_.valid && wb_.has_rd;
    return bit(writes, 2) | bit(wb_.rd == r, 1) | bit(wb_.rd != 0, 0);
  };
  if (u.reads_rs1) {
    cov_.hit_vector(p.fwd1_cond, fwd_inputs(u.rs1));
    cov_.hit_mux(p.fwd1_mux, fwd1);
    cov_.hit_branch(p.fwd1_br, fwd1);
  }
  if (u.reads_rs2) {
    cov_.hit_vector(p.fwd2_cond, fwd_inputs(u.rs2));
    cov_.hit_mux(p.fwd2_mux, fwd2);
    cov_.hit_branch(p.fwd2_br, fwd2);
  }
  const uint32_t a = fwd1 ? wb_.value : gpr_[u.rs1];
  const uint32_t b_reg = fwd2 ? wb_.value : gpr_[u.rs2];
  const uint32_t acc = fwd_rd ? wb_.value : gpr_[u.rd];
  const uint32_t b = u.imm_operand ? u.imm : b_reg;

  auto write_rd = [&](uint32_t v) {
    out.has_rd = true;
    out.rd = u.rd;
    out.value = v;
    if (u.rd != 0) ev.gpr_writes.push_back({u.rd, v});
  };
  auto write_flags = [&](uint32_t v) {
    flags_ = v;
    ev.csr_writes.push_back({csr::kFlags, v});
  };
  auto retire = [&]() { ++instret_; };

  const uint32_t pc = in.pc;
  std::optional<Redirect> redirect;
  auto jump = [&](uint32_t target, bool taken) -> bool {
    cov_.hit_vector(p.jump_misaligned, bit(taken, 1) | bit((target >> 1) & 1, 0));
    if (taken && (target & 3u)) return false;
    if (taken) redirect = Redirect{target, false};
    return true;
  };

  switch (u.op) {
    case Op::kAdd: {
      const uint64_t wide = uint64_t{a} + b;
      const auto r = static_cast<uint32_t>(wide);
      cov_.hit_vector(p.add_expr, bit(msb(a), 2) | bit(msb(b), 1) | bit(msb(r), 0));
      write_rd(r);
      const bool ovf = msb(a) == msb(b) && msb(r) != msb(a);
      write_flags(bit((wide >> 32) & 1, 0) | bit(ovf, 1));
      break;
    }
    case Op::kSub: {
      const uint64_t wide = uint64_t{a} + uint64_t{~b} + 1;
      const auto r = static_cast<uint32_t>(wide);
      const bool carry_out = (wide >> 32) & 1;
      cov_.hit_vector(p.sub_expr, bit(msb(a), 2) | bit(msb(b), 1) | bit(msb(r), 0));
      cov_.hit_vector(p.sub_borrow, bit(!carry_out, 2) | bit(msb(a), 1) | bit(msb(b), 0));
      const bool carry = bugs_.on(Bug::kCarrySub) ? carry_out : !carry_out;
      const bool ovf = bugs_.on(Bug::kOverflowSub) ? (msb(a) == msb(b) && msb(r) != msb(a))
                                                   : (msb(a) != msb(b) && msb(r) != msb(a));
      write_rd(r);
      write_flags(bit(carry, 0) | bit(ovf, 1));
      break;
    }
    case Op::kMac: {
      const int64_t prod = int64_t{static_cast<int32_t>(a)} * int64_t{static_cast<int32_t>(b)};
      const auto prod_lo = static_cast<uint32_t>(prod);
      const uint32_t r = acc + prod_lo;
      const bool mul_ovf = prod < INT32_MIN || prod > INT32_MAX;
      const bool add_ovf = msb(acc) == msb(prod_lo) && msb(r) != msb(acc);
      const int64_t exact = int64_t{static_cast<int32_t>(acc)} + prod;
      const bool ovf = bugs_.on(Bug::kMacOverflow) ? add_ovf : (exact < INT32_MIN || exact > INT32_MAX);
      cov_.hit_vector(p.mac_expr, bit(mul_ovf, 2) | bit(add_ovf, 1) | bit(msb(r), 0));
      write_rd(r);
      write_flags((flags_ & csr::kFlagCarry) | bit(ovf, 1));
      break;
    }
    case Op::kSlt:
    case Op::kSltu: {
      const bool lt = static_cast<int32_t>(a) < static_cast<int32_t>(b);
      const bool ltu = a < b;
      cov_.hit_vector(p.slt_expr, bit(msb(a), 2) | bit(msb(b), 1) | bit(ltu, 0));
      write_rd(u.op == Op::kSlt ? lt : ltu);
      break;
    }
    case Op::kAnd: write_rd(a & b); break;
    case Op::kOr: write_rd(a | b); break;
    case Op::kXor: write_rd(a ^ b); break;
    case Op::kSll:
    case Op::kSrl:
    case Op::kSra: {
      const uint32_t amt = b & 31;
      cov_.hit_vector(p.shift_expr, bit(amt == 0, 2) | bit(msb(a), 1) | bit(u.op == Op::kSra, 0));
      if (u.op == Op::kSll) write_rd(a << amt);
      else if (u.op == Op::kSrl) write_rd(a >> amt);
      else write_rd(static_cast<uint32_t>(static_cast<int32_t>(a) >> amt));
      break;
    }
    case Op::kLui: write_rd(u.imm); break;
    case Op::kAuipc: write_rd(pc + u.imm); break;

    case Op::kLoad: {
      const uint32_t addr = a + u.imm;
      const int size = 1 << (u.f3 & 3);
      cov_.hit_vector(p.load_misaligned,
                      bit(size == 2, 3) | bit(size == 4, 2) | bit((addr >> 1) & 1, 1) | bit(addr & 1, 0));
      if (addr & (size - 1)) return trap(cause::kMisalignedLoad, addr);
      uint32_t v = load(addr, size);
      if (!(u.f3 & 4) && size < 4) {
        const int shift = 32 - 8 * size;
        v = static_cast<uint32_t>(static_cast<int32_t>(v << shift) >> shift);
      }
      write_rd(v);
      break;
    }
    case Op::kStore: {
      const uint32_t addr = a + u.imm;
      const int size = 1 << u.f3;
      cov_.hit_vector(p.store_misaligned,
                      bit(size == 2, 3) | bit(size == 4, 2) | bit((addr >> 1) & 1, 1) | bit(addr & 1, 0));
      if (addr & (size - 1)) return trap(cause::kMisalignedStore, addr);
      const uint32_t v = size == 4 ? b_reg : b_reg & ((1u << (8 * size)) - 1);
      store(addr, size, v);
      ev.mem_writes.push_back({addr & kAddrMask, static_cast<uint8_t>(size), v});
      break;
    }
    case Op::kBranch: {
      const bool eq = a == b;
      const bool lt = static_cast<int32_t>(a) < static_cast<int32_t>(b);
      const bool ltu = a < b;
      cov_.hit_vector(p.cmp_expr, bit(eq, 2) | bit(lt, 1) | bit(ltu, 0));
      bool taken = false;
      switch (u.f3) {
        case 0: taken = eq; break;
        case 1: taken = !eq; break;
        case 4: taken = lt; break;
        case 5: taken = !lt; break;
        case 6: taken = ltu; break;
        case 7: taken = !ltu; break;
      }
      const std::size_t slot = u.arm - arm_of(isa::Mnemonic::BEQ);
      cov_.hit_branch(p.branch_taken[slot], taken);
      if (!jump(pc + u.imm, taken)) return trap(cause::kMisalignedFetch, pc);
      break;
    }
    case Op::kJal:
      if (!jump(pc + u.imm, true)) return trap(cause::kMisalignedFetch, pc);
      write_rd(pc + 4);
      break;
    case Op::kJalr:
      if (!jump((a + u.imm) & ~1u, true)) return trap(cause::kMisalignedFetch, pc);
      write_rd(pc + 4);
      break;

    case Op::kFence:
      redirect = Redirect{pc + 4, true};
      break;
    case Op::kEcall:
      return trap(mode() == PrivMode::kUser ? cause::kEcallUser : cause::kEcallMachine, pc);
    case Op::kEbreak:
      if (bugs_.on(Bug::kInstretEbreak)) --instret_;  // cancels the trap's increment
      return trap(cause::kBreakpoint, pc);
    case Op::kMret: {
      const bool user = mode() == PrivMode::kUser;
      cov_.hit_vector(p.mret_check, bit(user, 2) | bit((epcr_ >> 1) & 1, 1) | bit(epcr_ & 1, 0));
      if (user) return trap(cause::kIllegal, pc);
      if (epcr_ & 3u) return trap(cause::kMisalignedFetch, pc);
      cov_.hit_statement(p.mret_return);
      redirect = Redirect{epcr_, false};
      status_ = estatus_ & csr::kStatusMachine;
      ev.csr_writes.push_back({csr::kStatus, status_});
      break;
    }
    case Op::kCsr: {
      const CsrDesc* d = csr_desc(u.csr);
      const bool user = mode() == PrivMode::kUser;
      const bool writes = u.f3 == 1 || u.rs1 != 0;
      bool machine_only = d && d->machine_only;
      if (bugs_.on(Bug::kPrivEpcr) && u.csr == csr::kEpcr) machine_only = false;
      const bool read_only = d && d->read_only;
      cov_.hit_vector(p.csr_illegal, bit(d != nullptr, 4) | bit(user, 3) | bit(machine_only, 2) |
                                         bit(writes, 1) | bit(read_only, 0));
      if (!d || (user && machine_only) || (writes && read_only)) return trap(cause::kIllegal, pc);
      cov_.hit_statement(p.csr_read[static_cast<std::size_t>(d - kCsrFile.data())]);
      uint32_t old = 0;
      switch (u.csr) {
        case csr::kStatus: old = status_; break;
        case csr::kEpcr: old = epcr_; break;
        case csr::kEstatus: old = estatus_; break;
        case csr::kEear: old = eear_; break;
        case csr::kFlags: old = flags_; break;
        case csr::kInstret: old = static_cast<uint32_t>(instret_); break;
        default: break;
      }
      cov_.hit_branch(p.csr_write, writes);
      if (writes) {
        uint32_t next = u.f3 == 1 ? a : u.f3 == 2 ? (old | a) : (old & ~a);
        next &= d->mask;
        bool dropped = false;
        switch (u.csr) {
          case csr::kStatus: status_ = next; break;
          case csr::kEpcr: epcr_ = next; break;
          case csr::kEstatus: estatus_ = next; break;
          case csr::kEear:
            if (bugs_.on(Bug::kEearRo)) dropped = true;
            else eear_ = next;
            break;
          case csr::kFlags: flags_ = next; break;
          default: break;
        }
        if (!dropped) ev.csr_writes.push_back({u.csr, next});
      }
      write_rd(old);
      break;
    }
    case Op::kIllegal:
      break;
  }
  cov_.hit_branch(p.dx_trap, false);
  retire();
  return redirect;
}

void Dut::fetch(const std::optional<Redirect>& redirect) {
  const Probes& p = *probes_;
  CacheState next = ctrl_;
  if (stop_) {
    next = CacheState::kIdle;
    cache_en_ = false;
  } else if (redirect) {
    fetch_pc_ = redirect->target;
    flush_pending_ = redirect->flush;
    next = redirect->flush ? CacheState::kFlush : CacheState::kLookup;
  } else {
    switch (ctrl_) {
      case CacheState::kIdle:
        cache_en_ = true;
        next = CacheState::kLookup;
        break;
      case CacheState::kLookup: {
        const bool prot = fetch_pc_ >= layout::kNoFetchBase;
        cov_.hit_branch(p.fetch_prot, prot);
        if (prot) {
          ifq_ = {true, true, fetch_pc_, ifq_.word};
          fetch_pc_ += 4;
          break;
        }
        const Line& line = lines_[(fetch_pc_ / kLineBytes) % kCacheLines];
        const bool hit = line.valid && line.tag == fetch_pc_ / (kLineBytes * kCacheLines);
        cov_.hit_branch(p.icache_hit, hit);
        if (hit) {
          ifq_ = {true, false, fetch_pc_, line.data[(fetch_pc_ / 4) % (kLineBytes / 4)]};
          fetch_pc_ += 4;
        } else {
          refill_addr_ = fetch_pc_ & ~(kLineBytes - 1);
          refill_count_ = 0;
          next = CacheState::kRefill;
        }
        break;
      }
      case CacheState::kRefill:
        if (++refill_count_ == kRefillCycles) {
          Line& line = lines_[(refill_addr_ / kLineBytes) % kCacheLines];
          line.valid = true;
          line.tag = refill_addr_ / (kLineBytes * kCacheLines);
          for (uint32_t i = 0; i < kLineBytes / 4; ++i) line.data[i] = load(refill_addr_ + 4 * i, 4);
          cov_.hit_statement(p.refill_done);
          next = CacheState::kLookup;
        }
        break;
      case CacheState::kFlush:
        for (Line& line : lines_) line.valid = false;
        flush_pending_ = false;
        cov_.hit_statement(p.flush_done);
        next = CacheState::kLookup;
        break;
    }
  }
  cov_.hit_fsm_state(p.icache_fsm, static_cast<uint8_t>(ctrl_));
  cov_.hit_fsm_transition(p.icache_fsm, static_cast<uint8_t>(ctrl_), static_cast<uint8_t>(next));
  ctrl_ = next;
}

void Dut::sample_coverage() {
  const Probes& p = *probes_;
  toggles_[0].sample(cov_, ifq_.word);
  toggles_[1].sample(cov_, wb_.value);
  toggles_[2].sample(cov_, wb_.rd);
  toggles_[3].sample(cov_, flags_);
  toggles_[4].sample(cov_, status_);
  toggles_[5].sample(cov_, fetch_pc_ & 0xFFFF);
  const auto cur = static_cast<uint8_t>(mode() == PrivMode::kMachine);
  cov_.hit_fsm_state(p.priv_fsm, cur);
  cov_.hit_fsm_transition(p.priv_fsm, static_cast<uint8_t>(prev_status_ & 1), cur);
  prev_status_ = status_;
  cov_.hit_ctrlreg(p.ctrl_group, (uint32_t{flush_pending_} << 1) | uint32_t{cache_en_});
}

std::optional<CommitEvent> Dut::cycle() {
  if (finished_) return std::nullopt;
  ++cycle_count_;

  // Decode/execute sees the writeback latch of the previous cycle.
  WbSlot next_wb;
  std::optional<Redirect> redirect;
  if (!stop_ && ifq_.valid) {
    if (ifq_.pc == limits_.halt_pc) {
      cov_.hit_statement(probes_->halt_seen);
      stop_ = RunStatus::kHalted;
    } else if (executed_ >= limits_.max_commits) {
      stop_ = RunStatus::kBudget;
    } else {
      redirect = execute(ifq_, next_wb);
      ++executed_;
      if (next_wb.ev.exception && layout::in_handler(next_wb.ev.pc)) stop_ = RunStatus::kDoubleFault;
    }
    ifq_.valid = false;
  }

  std::optional<CommitEvent> retired;
  if (wb_.valid) {
    if (wb_.has_rd && wb_.rd != 0) gpr_[wb_.rd] = wb_.value;
    retired = std::move(wb_.ev);
  }
  if (next_wb.valid) {
    wb_ = std::move(next_wb);
  } else {
    wb_.valid = false;
  }

  fetch(redirect);
  sample_coverage();
  if (stop_ && !wb_.valid) finished_ = true;
  return retired;
}

DutRunResult dut_run(Dut& dut) {
  DutRunResult r{.trace = {}, .coverage = cov::CoverageMap(dut.coverage().manifest_ptr())};
  while (!dut.finished() && dut.cycles() < dut.max_cycles()) {
    if (auto ev = dut.cycle()) r.trace.events.push_back(std::move(*ev));
  }
  r.hang = !dut.finished();
  r.trace.status = dut.finished() ? *dut.stop_reason() : RunStatus::kBudget;
  r.cycles = dut.cycles();
  r.coverage = dut.take_coverage();
  return r;
}

DutRunResult run_dut(const Program& p, BugConfig bugs, uint64_t max_cycles, uint64_t max_commits) {
  Dut dut(build_image(p), p.entry_pc, bugs, dut_manifest(),
          {.max_cycles = max_cycles, .max_commits = max_commits, .halt_pc = p.halt_pc()});
  return dut_run(dut);
}

}  // namespace mrvfuzz
