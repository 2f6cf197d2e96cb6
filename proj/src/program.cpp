#include "mrvfuzz/program.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mrvfuzz {
namespace {

using isa::Fields;
using isa::Mnemonic;
namespace layout = isa::layout;

constexpr std::array<uint8_t, 4> kMagic{'T', 'H', 'Z', 'I'};
constexpr uint8_t kVersion = 0x01;
constexpr std::size_t kHeaderSize = 9;

void put_word(MemoryImage& img, uint32_t addr, uint32_t w) {
  for (int i = 0; i < 4; ++i) img[addr + i] = static_cast<uint8_t>(w >> (8 * i));
}

const std::array<uint32_t, 4> kHandler{
    isa::encode(Mnemonic::CSRRS, Fields{.rd = 31, .csr = isa::csr::kEpcr}),
    isa::encode(Mnemonic::ADDI, Fields{.rd = 31, .rs1 = 31, .imm = 4}),
    isa::encode(Mnemonic::CSRRW, Fields{.rs1 = 31, .csr = isa::csr::kEpcr}),
    isa::encode(Mnemonic::MRET, Fields{}),
};

}  // namespace

std::vector<uint32_t> standard_ci_preamble() {
  std::vector<uint32_t> ci;
  for (uint8_t r = 1; r < 32; ++r) {
    ci.push_back(isa::encode(Mnemonic::ADDI, Fields{.rd = r}));
  }
  ci.push_back(isa::encode(Mnemonic::LUI, Fields{.rd = 2, .imm = layout::kStackTop >> 12}));
  const uint32_t jal_pc = layout::kCiBase + 4 * static_cast<uint32_t>(ci.size());
  ci.push_back(isa::encode(
      Mnemonic::JAL, Fields{.imm = static_cast<int32_t>(layout::kTiBase - jal_pc)}));
  return ci;
}

std::span<const uint32_t> trap_handler_words() { return kHandler; }

Program make_program(std::vector<uint32_t> ti_words) {
  Program p;
  p.ci_words = standard_ci_preamble();
  p.ti_words = std::move(ti_words);
  return p;
}

MemoryImage build_image(const Program& p) {
  if (layout::kCiBase + 4 * p.ci_words.size() > p.ti_base) {
    throw FormatError("CI region overflows into the TI region");
  }
  if (p.halt_pc() + 4 > layout::kNoFetchBase) {
    throw FormatError("TI region overflows the fetchable address space");
  }
  MemoryImage img(layout::kMemSize, 0);
  uint32_t addr = layout::kTrapVector;
  for (uint32_t w : kHandler) put_word(img, std::exchange(addr, addr + 4), w);
  addr = layout::kCiBase;
  for (uint32_t w : p.ci_words) put_word(img, std::exchange(addr, addr + 4), w);
  addr = p.ti_base;
  for (uint32_t w : p.ti_words) put_word(img, std::exchange(addr, addr + 4), w);
  put_word(img, p.halt_pc(), isa::kHaltWord);
  return img;
}

std::vector<uint8_t> serialize_thzi(const Program& p) {
  if (p.ci_words.size() > 0xFFFF || p.ti_words.size() > 0xFFFF) {
    throw FormatError("too many words for a THZI file");
  }
  std::vector<uint8_t> out(kMagic.begin(), kMagic.end());
  out.push_back(kVersion);
  auto put16 = [&](std::size_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
  };
  auto put32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
  };
  put16(p.ci_words.size());
  put16(p.ti_words.size());
  for (uint32_t w : p.ci_words) put32(w);
  for (uint32_t w : p.ti_words) put32(w);
  return out;
}

Program parse_thzi(std::span<const uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("truncated THZI header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError("bad THZI magic");
  }
  if (bytes[4] != kVersion) throw FormatError("unsupported THZI version");
  const std::size_t ci = bytes[5] | (bytes[6] << 8);
  const std::size_t ti = bytes[7] | (bytes[8] << 8);
  if (bytes.size() != kHeaderSize + 4 * (ci + ti)) {
    throw FormatError("THZI length does not match its word counts");
  }
  auto word = [&](std::size_t i) {
    const std::size_t o = kHeaderSize + 4 * i;
    return uint32_t{bytes[o]} | (uint32_t{bytes[o + 1]} << 8) |
           (uint32_t{bytes[o + 2]} << 16) | (uint32_t{bytes[o + 3]} << 24);
  };
  Program p;
  for (std::size_t i = 0; i < ci; ++i) p.ci_words.push_back(word(i));
  for (std::size_t i = 0; i < ti; ++i) p.ti_words.push_back(word(ci + i));
  return p;
}

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

void write_thzi(const std::filesystem::path& path, const Program& p) {
  write_file(path, serialize_thzi(p));
}

Program read_thzi(const std::filesystem::path& path) { return parse_thzi(read_file(path)); }

uint64_t fnv1a64(std::span<const uint8_t> bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string program_hash(const Program& p) { return hash_hex(fnv1a64(serialize_thzi(p))); }

}  // namespace mrvfuzz
