#pragma once

// One shipped input per bug toggle that deterministically exposes it.
// DUT bugs ship as THZI programs (standard CIs, NOP-padded TIs); the two
// controller bugs ship as .ctl input sequences.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrvfuzz/controller.hpp"
#include "mrvfuzz/dut.hpp"
#include "mrvfuzz/program.hpp"

namespace mrvfuzz {

struct Witness {
  Bug bug;
  std::string file;  // file name under corpus/witnesses/
  std::string description;
  std::optional<Program> program;
  std::vector<CtrlInput> ctrl_inputs;
};

const std::vector<Witness>& witness_catalog();
const Witness& witness_for(Bug b);

/// The store-to-code sequence of the CACHE_INCOHERENCE witness with a
/// FENCE.I between the store and the rewritten instruction.
Program cache_witness_with_fence();

/// .ctl text: one tuple per line, "flush en debug_en pass ipass" as 0/1,
/// '#' comments. parse_ctl throws FormatError.
std::string format_ctl(const std::vector<CtrlInput>& inputs);
std::vector<CtrlInput> parse_ctl(std::string_view text);

/// Exact bytes of the shipped file.
std::vector<uint8_t> witness_file_bytes(const Witness& w);
void write_witnesses(const std::filesystem::path& dir);

/// Whether running the witness under `bugs` yields a mismatch (DUT vs GRM,
/// or buggy vs golden controller).
bool witness_mismatches(const Witness& w, BugConfig bugs);

}  // namespace mrvfuzz
