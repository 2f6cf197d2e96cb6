#pragma once

// MiniRV-32: an RV32I subset plus a flags CSR and one custom MAC
// instruction. Encodings of the shared operations are bit-identical to
// RV32I. See docs/isa.md for the field layouts, CSR table and trap table.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mrvfuzz::isa {

enum class Format : uint8_t { R, I, S, B, U, J, SYS };

// Declaration order is the instruction index used by the optimizer's
// tie-break and by the weight tables.
enum class Mnemonic : uint8_t {
  ADD, SUB, ADDI, SLT, SLTU, SLTI, AND, OR, XOR, ANDI, ORI, XORI,
  SLL, SRL, SRA, SLLI, SRLI, SRAI, LUI, AUIPC,
  LW, LH, LHU, LB, LBU, SW, SH, SB,
  BEQ, BNE, BLT, BGE, BLTU, BGEU, JAL, JALR,
  FENCE_I, ECALL, EBREAK, MRET, CSRRW, CSRRS, CSRRC,
  MAC,
};

inline constexpr std::size_t kNumMnemonics = 44;

std::string_view name(Mnemonic m);
std::optional<Mnemonic> parse_mnemonic(std::string_view s);
Format format_of(Mnemonic m);

/// Every legal mnemonic in index order.
std::span<const Mnemonic> legal_ops();
/// Arithmetic/logic subset used for the first half of seed TIs.
std::span<const Mnemonic> safe_ops();
bool is_safe(Mnemonic m);

// Operand fields. Fields that a format does not use must be zero.
// `imm` is the sign-extended immediate for I/S/B/J, the 20-bit upper
// value for U (as written in assembly), and the shift amount for
// SLLI/SRLI/SRAI.
struct Fields {
  uint8_t rd = 0;
  uint8_t rs1 = 0;
  uint8_t rs2 = 0;
  int32_t imm = 0;
  uint16_t csr = 0;

  friend bool operator==(const Fields&, const Fields&) = default;
};

struct Instruction {
  uint32_t word = 0;
  Mnemonic mnemonic = Mnemonic::ADDI;
  Format format = Format::I;
  Fields fields;
  // Bit positions of the opcode-side and data-side fields (masks).
  uint32_t opcode_bits = 0;
  uint32_t data_bits = 0;
};

class EncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws EncodeError on a field overflow or a nonzero unused field.
uint32_t encode(Mnemonic m, const Fields& f);
/// Same, looking the mnemonic up by name; unknown names throw EncodeError.
uint32_t encode(std::string_view mnemonic, const Fields& f);

/// Total: nullopt is the Illegal value.
std::optional<Instruction> decode(uint32_t word);

/// rd/rs1/rs2/imm/csr bits of a legal word; all ones for an illegal word.
uint32_t data_mask(uint32_t word);
uint32_t data_mask(Mnemonic m);
inline uint32_t opcode_mask(uint32_t word) { return ~data_mask(word); }

std::string disassemble(uint32_t word);

// ---------------------------------------------------------------------------
// CSRs

namespace csr {
inline constexpr uint16_t kStatus = 0x300;
inline constexpr uint16_t kEpcr = 0x341;
inline constexpr uint16_t kEstatus = 0x342;
inline constexpr uint16_t kEear = 0x343;
inline constexpr uint16_t kFlags = 0x800;
inline constexpr uint16_t kInstret = 0xC02;

inline constexpr uint32_t kStatusMachine = 1u;
inline constexpr uint32_t kFlagCarry = 1u;
inline constexpr uint32_t kFlagOverflow = 2u;
}  // namespace csr

struct CsrRule {
  uint16_t addr;
  std::string_view name;
  bool machine_only;
  bool read_only;
  uint32_t write_mask;
};

/// CSR table; each address appears once.
std::span<const CsrRule> csr_map();
const CsrRule* find_csr(uint16_t addr);

// ---------------------------------------------------------------------------
// Traps

namespace cause {
inline constexpr uint32_t kMisalignedFetch = 0;
inline constexpr uint32_t kFetchAccess = 1;
inline constexpr uint32_t kIllegal = 2;
inline constexpr uint32_t kBreakpoint = 3;
inline constexpr uint32_t kMisalignedLoad = 4;
inline constexpr uint32_t kMisalignedStore = 6;
inline constexpr uint32_t kEcallUser = 8;
inline constexpr uint32_t kEcallMachine = 11;
inline constexpr uint32_t kFetchPageFault = 12;
}  // namespace cause

// ---------------------------------------------------------------------------
// Memory layout

namespace layout {
inline constexpr uint32_t kMemSize = 64 * 1024;
inline constexpr uint32_t kTrapVector = 0x0100;
inline constexpr uint32_t kHandlerEnd = 0x0200;  // handler region [0x100, 0x200)
inline constexpr uint32_t kCiBase = 0x0200;
inline constexpr uint32_t kTiBase = 0x0400;
inline constexpr uint32_t kStackTop = 0x8000;
inline constexpr uint32_t kNoFetchBase = 0xF000;  // fetch at or above faults

inline constexpr bool in_handler(uint32_t pc) {
  return pc >= kTrapVector && pc < kHandlerEnd;
}
}  // namespace layout

inline constexpr uint32_t kNop = 0x00000013;  // ADDI x0, x0, 0
/// JAL x0, 0: the halt sentinel placed after the last TI.
inline constexpr uint32_t kHaltWord = 0x0000006F;

}  // namespace mrvfuzz::isa
