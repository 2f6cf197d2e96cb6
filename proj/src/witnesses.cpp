#include "mrvfuzz/witnesses.hpp"

#include <sstream>

#include "mrvfuzz/engine.hpp"

namespace mrvfuzz {
namespace {

using isa::Fields;
using isa::Mnemonic;
using isa::encode;

Program padded(std::vector<uint32_t> ti) {
  ti.resize(kTiCount, isa::kNop);
  return make_program(std::move(ti));
}

constexpr uint32_t kReservedAdd = 0x5Bu | (2u << 7) | (1u << 15) | (1u << 20);  // x2 = x1 + x1

std::vector<uint32_t> cache_sequence(bool fence) {
  // Rewrites the NOP at 0x41C with ADDI x7,x0,42 (0x02A00393) while the
  // line holding it is cached.
  return {
      encode(Mnemonic::LUI, Fields{.rd = 6, .imm = 0x02A00}),
      encode(Mnemonic::ADDI, Fields{.rd = 6, .rs1 = 6, .imm = 0x393}),
      isa::kNop,
      isa::kNop,
      encode(Mnemonic::SW, Fields{.rs2 = 6, .imm = 0x41C}),
      fence ? encode(Mnemonic::FENCE_I, Fields{}) : isa::kNop,
      isa::kNop,
      isa::kNop,  // 0x41C
  };
}

std::vector<Witness> build_catalog() {
  std::vector<Witness> w;
  auto add = [&](Bug b, std::string desc, std::vector<uint32_t> ti) {
    w.push_back({b, std::string(name(b)) + ".thzi", std::move(desc), padded(std::move(ti)), {}});
  };
  add(Bug::kFenceFields, "FENCE.I with imm=5",
      {encode(Mnemonic::FENCE_I, Fields{.imm = 5})});
  add(Bug::kExcType, "jump to the no-fetch region at 0xF000",
      {encode(Mnemonic::LUI, Fields{.rd = 5, .imm = 0xF}), encode(Mnemonic::JALR, Fields{.rs1 = 5})});
  add(Bug::kIllegalAccept, "reserved opcode 0x5B, funct3 0",
      {encode(Mnemonic::ADDI, Fields{.rd = 1, .imm = 1}), kReservedAdd});
  add(Bug::kCacheIncoherence, "store over a cached instruction without FENCE.I", cache_sequence(false));
  add(Bug::kCarrySub, "SUB 1 - 2 (borrow)",
      {encode(Mnemonic::ADDI, Fields{.rd = 1, .imm = 1}), encode(Mnemonic::ADDI, Fields{.rd = 2, .imm = 2}),
       encode(Mnemonic::SUB, Fields{.rd = 3, .rs1 = 1, .rs2 = 2})});
  add(Bug::kPrivEpcr, "drop to user mode, then write EPCR",
      {encode(Mnemonic::ADDI, Fields{.rd = 1, .imm = 0x40}), encode(Mnemonic::CSRRW, Fields{.csr = isa::csr::kStatus}),
       encode(Mnemonic::CSRRW, Fields{.rs1 = 1, .csr = isa::csr::kEpcr})});
  add(Bug::kEearRo, "CSRRW to EEAR",
      {encode(Mnemonic::ADDI, Fields{.rd = 1, .imm = 0x123}),
       encode(Mnemonic::CSRRW, Fields{.rs1 = 1, .csr = isa::csr::kEear})});
  add(Bug::kGpr0Fwd, "ADDI x0,x0,7 then ADD x1,x0,x0",
      {encode(Mnemonic::ADDI, Fields{.imm = 7}), encode(Mnemonic::ADD, Fields{.rd = 1})});
  add(Bug::kMacOverflow, "MAC with a product of 2^32",
      {encode(Mnemonic::LUI, Fields{.rd = 1, .imm = 0x10}), encode(Mnemonic::MAC, Fields{.rd = 3, .rs1 = 1, .rs2 = 1})});
  add(Bug::kOverflowSub, "SUB 1 - 2 (result sign differs from the minuend)",
      {encode(Mnemonic::ADDI, Fields{.rd = 1, .imm = 1}), encode(Mnemonic::ADDI, Fields{.rd = 2, .imm = 2}),
       encode(Mnemonic::SUB, Fields{.rd = 3, .rs1 = 1, .rs2 = 2})});
  add(Bug::kInstretEbreak, "EBREAK then read INSTRET",
      {encode(Mnemonic::EBREAK, Fields{}), encode(Mnemonic::CSRRS, Fields{.rd = 1, .csr = isa::csr::kInstret})});
  w.push_back({Bug::kCsB1, "CS_B1.ctl", "debug read with ipass set and pass clear", std::nullopt,
               {CtrlInput{.debug_en = true, .ipass = true}}});
  w.push_back({Bug::kCsB2, "CS_B2.ctl", "flush while the cache is disabled", std::nullopt,
               {CtrlInput{.flush = true}}});
  return w;
}

}  // namespace

const std::vector<Witness>& witness_catalog() {
  static const std::vector<Witness> catalog = build_catalog();
  return catalog;
}

const Witness& witness_for(Bug b) {
  for (const Witness& w : witness_catalog()) {
    if (w.bug == b) return w;
  }
  throw std::out_of_range("no witness for bug");
}

Program cache_witness_with_fence() { return padded(cache_sequence(true)); }

std::string format_ctl(const std::vector<CtrlInput>& inputs) {
  std::string s = "# flush en debug_en pass ipass\n";
  for (const CtrlInput& in : inputs) {
    s += std::to_string(in.flush) + ' ' + std::to_string(in.en) + ' ' + std::to_string(in.debug_en) + ' ' +
         std::to_string(in.pass) + ' ' + std::to_string(in.ipass) + '\n';
  }
  return s;
}

std::vector<CtrlInput> parse_ctl(std::string_view text) {
  std::vector<CtrlInput> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream fields(line);
    std::vector<int> bits;
    for (std::string tok; fields >> tok;) {
      if (tok != "0" && tok != "1") throw FormatError("ctl: expected 0 or 1, got '" + tok + "'");
      bits.push_back(tok == "1");
    }
    if (bits.empty()) continue;
    if (bits.size() != 5) throw FormatError("ctl: expected 5 bits per line");
    out.push_back({bool(bits[0]), bool(bits[1]), bool(bits[2]), bool(bits[3]), bool(bits[4])});
  }
  return out;
}

std::vector<uint8_t> witness_file_bytes(const Witness& w) {
  if (w.program) return serialize_thzi(*w.program);
  const std::string text = format_ctl(w.ctrl_inputs);
  return {text.begin(), text.end()};
}

void write_witnesses(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const Witness& w : witness_catalog()) write_file(dir / w.file, witness_file_bytes(w));
}

bool witness_mismatches(const Witness& w, BugConfig bugs) {
  if (w.program) return !run_input(*w.program, bugs).mismatches.empty();
  return controller_run(w.ctrl_inputs, BugConfig{}).outputs != controller_run(w.ctrl_inputs, bugs).outputs;
}

}  // namespace mrvfuzz
