#include "mrvfuzz/isa.hpp"

#include <algorithm>
#include <cstdio>

namespace mrvfuzz::isa {
namespace {

// Shape of the immediate / operand layout, finer than Format.
enum class Layout : uint8_t {
  kR,       // rd rs1 rs2, funct3 + funct7 fixed
  kI,       // rd rs1 imm[11:0]
  kShift,   // rd rs1 shamt[4:0], funct7 fixed
  kS,       // rs1 rs2 imm split
  kB,       // rs1 rs2 branch offset
  kU,       // rd imm[31:12]
  kJ,       // rd jump offset
  kFenceI,  // rd rs1 imm all ignored for legality
  kFixed,   // whole word fixed (ECALL/EBREAK/MRET)
  kCsr,     // rd rs1 csr
};

struct OpInfo {
  Mnemonic m;
  std::string_view name;
  Format format;
  Layout layout;
  uint32_t opcode;
  uint32_t funct3;
  uint32_t funct7;  // for kFixed: the whole word
};

constexpr uint32_t kOpReg = 0x33, kOpImm = 0x13, kOpLui = 0x37,
                   kOpAuipc = 0x17, kOpLoad = 0x03, kOpStore = 0x23,
                   kOpBranch = 0x63, kOpJal = 0x6F, kOpJalr = 0x67,
                   kOpMisc = 0x0F, kOpSystem = 0x73, kOpCustom0 = 0x0B;

constexpr std::array<OpInfo, kNumMnemonics> kOps{{
    {Mnemonic::ADD, "ADD", Format::R, Layout::kR, kOpReg, 0, 0x00},
    {Mnemonic::SUB, "SUB", Format::R, Layout::kR, kOpReg, 0, 0x20},
    {Mnemonic::ADDI, "ADDI", Format::I, Layout::kI, kOpImm, 0, 0},
    {Mnemonic::SLT, "SLT", Format::R, Layout::kR, kOpReg, 2, 0x00},
    {Mnemonic::SLTU, "SLTU", Format::R, Layout::kR, kOpReg, 3, 0x00},
    {Mnemonic::SLTI, "SLTI", Format::I, Layout::kI, kOpImm, 2, 0},
    {Mnemonic::AND, "AND", Format::R, Layout::kR, kOpReg, 7, 0x00},
    {Mnemonic::OR, "OR", Format::R, Layout::kR, kOpReg, 6, 0x00},
    {Mnemonic::XOR, "XOR", Format::R, Layout::kR, kOpReg, 4, 0x00},
    {Mnemonic::ANDI, "ANDI", Format::I, Layout::kI, kOpImm, 7, 0},
    {Mnemonic::ORI, "ORI", Format::I, Layout::kI, kOpImm, 6, 0},
    {Mnemonic::XORI, "XORI", Format::I, Layout::kI, kOpImm, 4, 0},
    {Mnemonic::SLL, "SLL", Format::R, Layout::kR, kOpReg, 1, 0x00},
    {Mnemonic::SRL, "SRL", Format::R, Layout::kR, kOpReg, 5, 0x00},
    {Mnemonic::SRA, "SRA", Format::R, Layout::kR, kOpReg, 5, 0x20},
    {Mnemonic::SLLI, "SLLI", Format::I, Layout::kShift, kOpImm, 1, 0x00},
    {Mnemonic::SRLI, "SRLI", Format::I, Layout::kShift, kOpImm, 5, 0x00},
    {Mnemonic::SRAI, "SRAI", Format::I, Layout::kShift, kOpImm, 5, 0x20},
    {Mnemonic::LUI, "LUI", Format::U, Layout::kU, kOpLui, 0, 0},
    {Mnemonic::AUIPC, "AUIPC", Format::U, Layout::kU, kOpAuipc, 0, 0},
    {Mnemonic::LW, "LW", Format::I, Layout::kI, kOpLoad, 2, 0},
    {Mnemonic::LH, "LH", Format::I, Layout::kI, kOpLoad, 1, 0},
    {Mnemonic::LHU, "LHU", Format::I, Layout::kI, kOpLoad, 5, 0},
    {Mnemonic::LB, "LB", Format::I, Layout::kI, kOpLoad, 0, 0},
    {Mnemonic::LBU, "LBU", Format::I, Layout::kI, kOpLoad, 4, 0},
    {Mnemonic::SW, "SW", Format::S, Layout::kS, kOpStore, 2, 0},
    {Mnemonic::SH, "SH", Format::S, Layout::kS, kOpStore, 1, 0},
    {Mnemonic::SB, "SB", Format::S, Layout::kS, kOpStore, 0, 0},
    {Mnemonic::BEQ, "BEQ", Format::B, Layout::kB, kOpBranch, 0, 0},
    {Mnemonic::BNE, "BNE", Format::B, Layout::kB, kOpBranch, 1, 0},
    {Mnemonic::BLT, "BLT", Format::B, Layout::kB, kOpBranch, 4, 0},
    {Mnemonic::BGE, "BGE", Format::B, Layout::kB, kOpBranch, 5, 0},
    {Mnemonic::BLTU, "BLTU", Format::B, Layout::kB, kOpBranch, 6, 0},
    {Mnemonic::BGEU, "BGEU", Format::B, Layout::kB, kOpBranch, 7, 0},
    {Mnemonic::JAL, "JAL", Format::J, Layout::kJ, kOpJal, 0, 0},
    {Mnemonic::JALR, "JALR", Format::I, Layout::kI, kOpJalr, 0, 0},
    {Mnemonic::FENCE_I, "FENCE.I", Format::I, Layout::kFenceI, kOpMisc, 1, 0},
    {Mnemonic::ECALL, "ECALL", Format::SYS, Layout::kFixed, kOpSystem, 0, 0x00000073},
    {Mnemonic::EBREAK, "EBREAK", Format::SYS, Layout::kFixed, kOpSystem, 0, 0x00100073},
    {Mnemonic::MRET, "MRET", Format::SYS, Layout::kFixed, kOpSystem, 0, 0x30200073},
    {Mnemonic::CSRRW, "CSRRW", Format::SYS, Layout::kCsr, kOpSystem, 1, 0},
    {Mnemonic::CSRRS, "CSRRS", Format::SYS, Layout::kCsr, kOpSystem, 2, 0},
    {Mnemonic::CSRRC, "CSRRC", Format::SYS, Layout::kCsr, kOpSystem, 3, 0},
    {Mnemonic::MAC, "MAC", Format::R, Layout::kR, kOpCustom0, 0, 0x00},
}};

constexpr std::array<Mnemonic, kNumMnemonics> kLegal = [] {
  std::array<Mnemonic, kNumMnemonics> a{};
  for (std::size_t i = 0; i < kNumMnemonics; ++i) a[i] = kOps[i].m;
  return a;
}();

constexpr std::array<Mnemonic, 21> kSafe{
    Mnemonic::ADD,  Mnemonic::SUB,  Mnemonic::ADDI, Mnemonic::SLT,
    Mnemonic::SLTU, Mnemonic::SLTI, Mnemonic::AND,  Mnemonic::OR,
    Mnemonic::XOR,  Mnemonic::ANDI, Mnemonic::ORI,  Mnemonic::XORI,
    Mnemonic::SLL,  Mnemonic::SRL,  Mnemonic::SRA,  Mnemonic::SLLI,
    Mnemonic::SRLI, Mnemonic::SRAI, Mnemonic::LUI,  Mnemonic::AUIPC,
    Mnemonic::MAC,
};

constexpr std::array<CsrRule, 6> kCsrs{{
    {csr::kStatus, "STATUS", true, false, csr::kStatusMachine},
    {csr::kEpcr, "EPCR", true, false, 0xFFFFFFFFu},
    {csr::kEstatus, "ESTATUS", true, false, csr::kStatusMachine},
    {csr::kEear, "EEAR", true, false, 0xFFFFFFFFu},
    {csr::kFlags, "FLAGS", false, false, csr::kFlagCarry | csr::kFlagOverflow},
    {csr::kInstret, "INSTRET", false, true, 0},
}};

constexpr uint32_t kRdBits = 0x00000F80u;
constexpr uint32_t kRs1Bits = 0x000F8000u;
constexpr uint32_t kRs2Bits = 0x01F00000u;
constexpr uint32_t kImm12Bits = 0xFFF00000u;
constexpr uint32_t kSplitImmBits = 0xFE000F80u;  // imm[11:5] | imm[4:0]
constexpr uint32_t kUpperBits = 0xFFFFF000u;

constexpr uint32_t layout_data_mask(Layout l) {
  switch (l) {
    case Layout::kR:
    case Layout::kShift:
      return kRdBits | kRs1Bits | kRs2Bits;
    case Layout::kI:
    case Layout::kFenceI:
    case Layout::kCsr:
      return kRdBits | kRs1Bits | kImm12Bits;
    case Layout::kS:
    case Layout::kB:
      return kRs1Bits | kRs2Bits | kSplitImmBits;
    case Layout::kU:
    case Layout::kJ:
      return kRdBits | kUpperBits;
    case Layout::kFixed:
      return 0;
  }
  return 0xFFFFFFFFu;
}

const OpInfo& info(Mnemonic m) { return kOps[static_cast<std::size_t>(m)]; }

uint32_t bits(uint32_t w, int hi, int lo) {
  return (w >> lo) & ((1u << (hi - lo + 1)) - 1u);
}

int32_t sext(uint32_t v, int width) {
  const uint32_t sign = 1u << (width - 1);
  return static_cast<int32_t>((v ^ sign) - sign);
}

void check_reg(uint8_t r, const char* what) {
  if (r >= 32) throw EncodeError(std::string(what) + " register out of range");
}

void check_range(int64_t v, int64_t lo, int64_t hi, const char* what) {
  if (v < lo || v > hi) throw EncodeError(std::string(what) + " out of range");
}

void require_zero(bool zero, const char* what) {
  if (!zero) throw EncodeError(std::string(what) + " is not used by this format");
}

// Legality by opcode/funct fields only; returns the matching mnemonic.
std::optional<Mnemonic> classify(uint32_t w) {
  const uint32_t opcode = bits(w, 6, 0);
  const uint32_t f3 = bits(w, 14, 12);
  const uint32_t f7 = bits(w, 31, 25);
  for (const OpInfo& op : kOps) {
    if (op.layout == Layout::kFixed) {
      if (w == op.funct7) return op.m;
      continue;
    }
    if (op.opcode != opcode) continue;
    switch (op.layout) {
      case Layout::kU:
      case Layout::kJ:
        return op.m;
      case Layout::kR:
      case Layout::kShift:
        if (op.funct3 == f3 && op.funct7 == f7) return op.m;
        break;
      default:
        if (op.funct3 == f3) return op.m;
        break;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view name(Mnemonic m) { return info(m).name; }

std::optional<Mnemonic> parse_mnemonic(std::string_view s) {
  for (const OpInfo& op : kOps) {
    if (op.name == s) return op.m;
  }
  return std::nullopt;
}

Format format_of(Mnemonic m) { return info(m).format; }

std::span<const Mnemonic> legal_ops() { return kLegal; }
std::span<const Mnemonic> safe_ops() { return kSafe; }
bool is_safe(Mnemonic m) {
  return std::find(kSafe.begin(), kSafe.end(), m) != kSafe.end();
}

uint32_t encode(Mnemonic m, const Fields& f) {
  const OpInfo& op = info(m);
  const uint32_t base = op.opcode | (op.funct3 << 12);
  const uint32_t rd = uint32_t{f.rd} << 7;
  const uint32_t rs1 = uint32_t{f.rs1} << 15;
  const uint32_t rs2 = uint32_t{f.rs2} << 20;
  const auto imm = static_cast<uint32_t>(f.imm);

  switch (op.layout) {
    case Layout::kR:
      check_reg(f.rd, "rd");
      check_reg(f.rs1, "rs1");
      check_reg(f.rs2, "rs2");
      require_zero(f.imm == 0 && f.csr == 0, "imm/csr");
      return base | (op.funct7 << 25) | rd | rs1 | rs2;
    case Layout::kI:
    case Layout::kFenceI:
      check_reg(f.rd, "rd");
      check_reg(f.rs1, "rs1");
      check_range(f.imm, -2048, 2047, "imm");
      require_zero(f.rs2 == 0 && f.csr == 0, "rs2/csr");
      return base | rd | rs1 | (imm << 20);
    case Layout::kShift:
      check_reg(f.rd, "rd");
      check_reg(f.rs1, "rs1");
      check_range(f.imm, 0, 31, "shamt");
      require_zero(f.rs2 == 0 && f.csr == 0, "rs2/csr");
      return base | (op.funct7 << 25) | rd | rs1 | (imm << 20);
    case Layout::kS:
      check_reg(f.rs1, "rs1");
      check_reg(f.rs2, "rs2");
      check_range(f.imm, -2048, 2047, "imm");
      require_zero(f.rd == 0 && f.csr == 0, "rd/csr");
      return base | rs1 | rs2 | (bits(imm, 4, 0) << 7) | (bits(imm, 11, 5) << 25);
    case Layout::kB:
      check_reg(f.rs1, "rs1");
      check_reg(f.rs2, "rs2");
      check_range(f.imm, -4096, 4094, "branch offset");
      if (f.imm & 1) throw EncodeError("branch offset must be even");
      require_zero(f.rd == 0 && f.csr == 0, "rd/csr");
      return base | rs1 | rs2 | (bits(imm, 11, 11) << 7) | (bits(imm, 4, 1) << 8) |
             (bits(imm, 10, 5) << 25) | (bits(imm, 12, 12) << 31);
    case Layout::kU:
      check_reg(f.rd, "rd");
      check_range(f.imm, 0, 0xFFFFF, "upper immediate");
      require_zero(f.rs1 == 0 && f.rs2 == 0 && f.csr == 0, "rs1/rs2/csr");
      return op.opcode | rd | (imm << 12);
    case Layout::kJ:
      check_reg(f.rd, "rd");
      check_range(f.imm, -(1 << 20), (1 << 20) - 2, "jump offset");
      if (f.imm & 1) throw EncodeError("jump offset must be even");
      require_zero(f.rs1 == 0 && f.rs2 == 0 && f.csr == 0, "rs1/rs2/csr");
      return op.opcode | rd | (bits(imm, 19, 12) << 12) | (bits(imm, 11, 11) << 20) |
             (bits(imm, 10, 1) << 21) | (bits(imm, 20, 20) << 31);
    case Layout::kFixed:
      require_zero(f == Fields{}, "operand");
      return op.funct7;
    case Layout::kCsr:
      check_reg(f.rd, "rd");
      check_reg(f.rs1, "rs1");
      check_range(f.csr, 0, 0xFFF, "csr");
      require_zero(f.rs2 == 0 && f.imm == 0, "rs2/imm");
      return base | rd | rs1 | (uint32_t{f.csr} << 20);
  }
  throw EncodeError("unreachable layout");
}

uint32_t encode(std::string_view mnemonic, const Fields& f) {
  const auto m = parse_mnemonic(mnemonic);
  if (!m) throw EncodeError("unknown mnemonic: " + std::string(mnemonic));
  return encode(*m, f);
}

std::optional<Instruction> decode(uint32_t w) {
  const auto m = classify(w);
  if (!m) return std::nullopt;
  const OpInfo& op = info(*m);

  Instruction in;
  in.word = w;
  in.mnemonic = *m;
  in.format = op.format;
  in.data_bits = layout_data_mask(op.layout);
  in.opcode_bits = ~in.data_bits;

  Fields& f = in.fields;
  const auto rd = static_cast<uint8_t>(bits(w, 11, 7));
  const auto rs1 = static_cast<uint8_t>(bits(w, 19, 15));
  const auto rs2 = static_cast<uint8_t>(bits(w, 24, 20));
  switch (op.layout) {
    case Layout::kR:
      f.rd = rd, f.rs1 = rs1, f.rs2 = rs2;
      break;
    case Layout::kI:
    case Layout::kFenceI:
      f.rd = rd, f.rs1 = rs1, f.imm = sext(bits(w, 31, 20), 12);
      break;
    case Layout::kShift:
      f.rd = rd, f.rs1 = rs1, f.imm = static_cast<int32_t>(bits(w, 24, 20));
      break;
    case Layout::kS:
      f.rs1 = rs1, f.rs2 = rs2;
      f.imm = sext((bits(w, 31, 25) << 5) | bits(w, 11, 7), 12);
      break;
    case Layout::kB:
      f.rs1 = rs1, f.rs2 = rs2;
      f.imm = sext((bits(w, 31, 31) << 12) | (bits(w, 7, 7) << 11) |
                       (bits(w, 30, 25) << 5) | (bits(w, 11, 8) << 1),
                   13);
      break;
    case Layout::kU:
      f.rd = rd, f.imm = static_cast<int32_t>(bits(w, 31, 12));
      break;
    case Layout::kJ:
      f.rd = rd;
      f.imm = sext((bits(w, 31, 31) << 20) | (bits(w, 19, 12) << 12) |
                       (bits(w, 20, 20) << 11) | (bits(w, 30, 21) << 1),
                   21);
      break;
    case Layout::kFixed:
      break;
    case Layout::kCsr:
      f.rd = rd, f.rs1 = rs1, f.csr = static_cast<uint16_t>(bits(w, 31, 20));
      break;
  }
  return in;
}

uint32_t data_mask(uint32_t word) {
  const auto m = classify(word);
  return m ? layout_data_mask(info(*m).layout) : 0xFFFFFFFFu;
}

uint32_t data_mask(Mnemonic m) { return layout_data_mask(info(m).layout); }

std::string disassemble(uint32_t word) {
  const auto in = decode(word);
  char buf[96];
  if (!in) {
    std::snprintf(buf, sizeof buf, "<illegal 0x%08x>", word);
    return buf;
  }
  const Fields& f = in->fields;
  const std::string_view n = name(in->mnemonic);
  const int len = static_cast<int>(n.size());
  switch (info(in->mnemonic).layout) {
    case Layout::kR:
      std::snprintf(buf, sizeof buf, "%.*s x%u, x%u, x%u", len, n.data(), f.rd, f.rs1, f.rs2);
      break;
    case Layout::kI:
      if (in->mnemonic == Mnemonic::JALR || (in->mnemonic >= Mnemonic::LW && in->mnemonic <= Mnemonic::LBU)) {
        std::snprintf(buf, sizeof buf, "%.*s x%u, %d(x%u)", len, n.data(), f.rd, f.imm, f.rs1);
        break;
      }
      [[fallthrough]];
    case Layout::kShift:
    case Layout::kFenceI:
      std::snprintf(buf, sizeof buf, "%.*s x%u, x%u, %d", len, n.data(), f.rd, f.rs1, f.imm);
      break;
    case Layout::kS:
      std::snprintf(buf, sizeof buf, "%.*s x%u, %d(x%u)", len, n.data(), f.rs2, f.imm, f.rs1);
      break;
    case Layout::kB:
      std::snprintf(buf, sizeof buf, "%.*s x%u, x%u, %d", len, n.data(), f.rs1, f.rs2, f.imm);
      break;
    case Layout::kU:
      std::snprintf(buf, sizeof buf, "%.*s x%u, 0x%x", len, n.data(), f.rd, f.imm);
      break;
    case Layout::kJ:
      std::snprintf(buf, sizeof buf, "%.*s x%u, %d", len, n.data(), f.rd, f.imm);
      break;
    case Layout::kFixed:
      std::snprintf(buf, sizeof buf, "%.*s", len, n.data());
      break;
    case Layout::kCsr:
      std::snprintf(buf, sizeof buf, "%.*s x%u, 0x%03x, x%u", len, n.data(), f.rd, f.csr, f.rs1);
      break;
  }
  return buf;
}

std::span<const CsrRule> csr_map() { return kCsrs; }

const CsrRule* find_csr(uint16_t addr) {
  for (const CsrRule& r : kCsrs) {
    if (r.addr == addr) return &r;
  }
  return nullptr;
}

}  // namespace mrvfuzz::isa
