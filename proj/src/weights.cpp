#include "mrvfuzz/weights.hpp"

#include <algorithm>
#include <fstream>

#include "mrvfuzz/program.hpp"

namespace mrvfuzz {

WeightTable WeightTable::uniform() {
  WeightTable t;
  std::fill(t.q_.begin(), t.q_.end(), true);
  return t;
}

WeightTable WeightTable::from_pairs(const std::vector<std::size_t>& q) {
  WeightTable t;
  for (std::size_t p : q) t.set(p);
  return t;
}

bool WeightTable::w_instr(isa::Mnemonic i) const {
  for (std::size_t m = 0; m < kNumMutations; ++m) {
    if (w(i, m)) return true;
  }
  return false;
}

std::vector<std::size_t> WeightTable::pairs() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < kNumPairs; ++p) {
    if (q_[p]) out.push_back(p);
  }
  return out;
}

std::vector<isa::Mnemonic> WeightTable::instructions() const {
  std::vector<isa::Mnemonic> out;
  for (isa::Mnemonic i : isa::legal_ops()) {
    if (w_instr(i)) out.push_back(i);
  }
  return out;
}

bool WeightTable::empty() const { return std::none_of(q_.begin(), q_.end(), [](bool b) { return b; }); }

nlohmann::json to_json(const WeightTable& w) {
  nlohmann::json q = nlohmann::json::array();
  for (std::size_t p : w.pairs()) {
    const auto i = static_cast<isa::Mnemonic>(p / kNumMutations);
    q.push_back({{"instr", isa::name(i)}, {"mutation", "M" + std::to_string(p % kNumMutations)}});
  }
  nlohmann::json wi = nlohmann::json::object();
  for (isa::Mnemonic i : isa::legal_ops()) wi[std::string(isa::name(i))] = w.w_instr(i) ? 1 : 0;
  return {{"schema", "mrvfuzz.weights/1"}, {"q", q}, {"w_instr", wi}};
}

WeightTable weights_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema") != "mrvfuzz.weights/1") throw WeightsError("unsupported weights schema");
    WeightTable t;
    for (const auto& e : j.at("q")) {
      const auto i = isa::parse_mnemonic(e.at("instr").get<std::string>());
      const std::string m = e.at("mutation").get<std::string>();
      if (!i) throw WeightsError("unknown instruction in weights: " + e.at("instr").get<std::string>());
      std::size_t idx = kNumMutations;
      if (m.size() >= 2 && m[0] == 'M') {
        try {
          idx = std::stoul(m.substr(1));
        } catch (const std::exception&) {
        }
      }
      if (idx >= kNumMutations) throw WeightsError("unknown mutation in weights: " + m);
      t.set(pair_index(*i, idx));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw WeightsError(std::string("malformed weights file: ") + e.what());
  }
}

WeightTable read_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw WeightsError("cannot open weights file " + path.string());
  try {
    return weights_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw WeightsError(std::string("malformed weights file: ") + e.what());
  }
}

}  // namespace mrvfuzz
