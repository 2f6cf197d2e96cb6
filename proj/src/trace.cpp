#include "mrvfuzz/trace.hpp"

#include <cstdio>
#include <sstream>

#include "mrvfuzz/isa.hpp"

namespace mrvfuzz {

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kHalted: return "halted";
    case RunStatus::kBudget: return "budget";
    case RunStatus::kDoubleFault: return "doublefault";
  }
  return "?";
}

std::string hex32(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

nlohmann::json to_json(const CommitEvent& e) {
  using nlohmann::json;
  json j;
  j["seq"] = e.seq;
  j["pc"] = e.pc;
  j["instr"] = e.instr_word;
  json gpr = json::array();
  for (const auto& w : e.gpr_writes) gpr.push_back({w.index, w.value});
  json csr = json::array();
  for (const auto& w : e.csr_writes) csr.push_back({w.addr, w.value});
  json mem = json::array();
  for (const auto& w : e.mem_writes) mem.push_back({w.addr, w.size, w.value});
  j["gpr"] = std::move(gpr);
  j["csr"] = std::move(csr);
  j["mem"] = std::move(mem);
  j["exc"] = e.exception ? json(*e.exception) : json(nullptr);
  return j;
}

CommitEvent commit_event_from_json(const nlohmann::json& j) {
  CommitEvent e;
  e.seq = j.at("seq").get<uint64_t>();
  e.pc = j.at("pc").get<uint32_t>();
  e.instr_word = j.at("instr").get<uint32_t>();
  for (const auto& w : j.at("gpr")) {
    e.gpr_writes.push_back({w.at(0).get<uint8_t>(), w.at(1).get<uint32_t>()});
  }
  for (const auto& w : j.at("csr")) {
    e.csr_writes.push_back({w.at(0).get<uint16_t>(), w.at(1).get<uint32_t>()});
  }
  for (const auto& w : j.at("mem")) {
    e.mem_writes.push_back(
        {w.at(0).get<uint32_t>(), w.at(1).get<uint8_t>(), w.at(2).get<uint32_t>()});
  }
  if (!j.at("exc").is_null()) e.exception = j.at("exc").get<uint32_t>();
  return e;
}

std::string to_jsonl(const ArchTrace& t) {
  std::string out;
  for (const auto& e : t.events) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<CommitEvent> events_from_jsonl(std::string_view text) {
  std::vector<CommitEvent> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(commit_event_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

std::string format_event(const CommitEvent& e) {
  std::ostringstream os;
  os << '#' << e.seq << ' ' << hex32(e.pc) << ' ' << hex32(e.instr_word) << ' '
     << isa::disassemble(e.instr_word);
  for (const auto& w : e.gpr_writes) os << " x" << int{w.index} << '=' << hex32(w.value);
  for (const auto& w : e.csr_writes) {
    const auto* rule = isa::find_csr(w.addr);
    os << ' ' << (rule ? std::string(rule->name) : hex32(w.addr)) << '=' << hex32(w.value);
  }
  for (const auto& w : e.mem_writes) {
    os << " mem" << int{w.size} << '[' << hex32(w.addr) << "]=" << hex32(w.value);
  }
  if (e.exception) os << " exc=" << *e.exception;
  return os.str();
}

}  // namespace mrvfuzz
