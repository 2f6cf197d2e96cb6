#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mrvfuzz {

struct GprWrite {
  uint8_t index;
  uint32_t value;
  friend auto operator<=>(const GprWrite&, const GprWrite&) = default;
};

struct CsrWrite {
  uint16_t addr;
  uint32_t value;
  friend auto operator<=>(const CsrWrite&, const CsrWrite&) = default;
};

struct MemWrite {
  uint32_t addr;
  uint8_t size;
  uint32_t value;
  friend auto operator<=>(const MemWrite&, const MemWrite&) = default;
};

/// Architectural effects of one retired instruction. A trapping
/// instruction carries its trap-side CSR writes (EPCR, ESTATUS, EEAR,
/// STATUS) and no GPR or memory writes.
struct CommitEvent {
  uint64_t seq = 0;
  uint32_t pc = 0;
  uint32_t instr_word = 0;
  std::vector<GprWrite> gpr_writes;
  std::vector<CsrWrite> csr_writes;
  std::vector<MemWrite> mem_writes;
  std::optional<uint32_t> exception;

  friend bool operator==(const CommitEvent&, const CommitEvent&) = default;
};

enum class RunStatus : uint8_t { kHalted, kBudget, kDoubleFault };

std::string_view to_string(RunStatus s);

struct ArchTrace {
  std::vector<CommitEvent> events;
  RunStatus status = RunStatus::kBudget;
};

nlohmann::json to_json(const CommitEvent& e);
CommitEvent commit_event_from_json(const nlohmann::json& j);

/// One CommitEvent per line.
std::string to_jsonl(const ArchTrace& t);
std::vector<CommitEvent> events_from_jsonl(std::string_view text);

std::string format_event(const CommitEvent& e);
std::string hex32(uint32_t v);

}  // namespace mrvfuzz
