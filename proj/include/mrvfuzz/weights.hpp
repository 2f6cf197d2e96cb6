#pragma once

// Indicator weights over (instruction, mutation) pairs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrvfuzz/isa.hpp"

namespace mrvfuzz {

inline constexpr std::size_t kNumMutations = 12;
inline constexpr std::size_t kNumPairs = isa::kNumMnemonics * kNumMutations;

/// Row index of a pair: instruction index major, mutation index minor.
constexpr std::size_t pair_index(isa::Mnemonic i, std::size_t m) {
  return static_cast<std::size_t>(i) * kNumMutations + m;
}

class WeightTable {
 public:
  /// Empty q: every weight 0.
  WeightTable() : q_(kNumPairs, false) {}
  /// q = every pair.
  static WeightTable uniform();
  static WeightTable from_pairs(const std::vector<std::size_t>& q);

  bool w(isa::Mnemonic i, std::size_t m) const { return q_[pair_index(i, m)]; }
  bool w(std::size_t pair) const { return q_.at(pair); }
  /// 1 iff some mutation is selected for the instruction.
  bool w_instr(isa::Mnemonic i) const;
  void set(std::size_t pair, bool v = true) { q_.at(pair) = v; }

  std::vector<std::size_t> pairs() const;
  std::vector<isa::Mnemonic> instructions() const;
  bool empty() const;

  friend bool operator==(const WeightTable&, const WeightTable&) = default;

 private:
  std::vector<bool> q_;
};

class WeightsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const WeightTable& w);
/// Throws WeightsError on a malformed document.
WeightTable weights_from_json(const nlohmann::json& j);
WeightTable read_weights(const std::filesystem::path& path);

}  // namespace mrvfuzz
