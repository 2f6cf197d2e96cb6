#pragma once

// Profiling of (instruction, mutation) pairs and the set-cover solve that
// turns the profile into indicator weights.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrvfuzz/coverage.hpp"
#include "mrvfuzz/dut.hpp"
#include "mrvfuzz/weights.hpp"

namespace mrvfuzz {

class OptimizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// d[p][c] = 1 iff row p hit column c. Columns are the points observed
/// during profiling; `pairs[p]` is the pair index of row p.
class ProfileMatrix {
 public:
  ProfileMatrix() = default;
  ProfileMatrix(std::vector<std::size_t> pairs, std::size_t num_points);

  /// Generic instance: row i covers rows[i]; pair ids are 0..n-1.
  static ProfileMatrix from_sets(const std::vector<std::vector<uint32_t>>& rows, std::size_t num_points);

  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_points() const { return num_points_; }
  const std::vector<std::size_t>& pairs() const { return pairs_; }

  bool d(std::size_t row, std::size_t point) const { return (rows_[row][point >> 6] >> (point & 63)) & 1u; }
  void set(std::size_t row, std::size_t point) { rows_[row][point >> 6] |= uint64_t{1} << (point & 63); }
  const std::vector<uint64_t>& row_bits(std::size_t row) const { return rows_[row]; }

  /// Columns hit by at least one row.
  std::vector<uint64_t> covered_points() const;
  /// Every column is hit by some row (the profile invariant).
  bool columns_all_covered() const;

  // Labels carried into profile.json.
  std::vector<uint32_t> point_ids;  // global DUT point index per column
  std::vector<std::string> point_labels;
  nlohmann::json meta = nlohmann::json::object();

 private:
  std::vector<std::size_t> pairs_;
  std::size_t num_points_ = 0;
  std::vector<std::vector<uint64_t>> rows_;
};

/// Profiles every (instruction, mutation) pair on the bugs-off DUT:
/// `runs_per_pair` programs whose TIs are all that instruction, each TI
/// mutated once; coverage is ORed into the pair's row. Columns are the
/// points hit by at least one pair.
ProfileMatrix profile(uint32_t runs_per_pair, uint64_t seed, unsigned lanes = 1,
                      uint64_t max_cycles = kDefaultMaxCycles);

/// Greedy set cover: repeatedly take the row with the largest uncovered
/// gain, lowest row index on ties. Returns selected row indices.
std::vector<std::size_t> greedy_cover(const ProfileMatrix& m);

inline constexpr std::size_t kExactCoverMaxRows = 20;
/// Minimum-cardinality cover, lexicographically smallest among minima.
/// Throws OptimizerError above kExactCoverMaxRows rows.
std::vector<std::size_t> exact_cover(const ProfileMatrix& m);

/// Rows in `q` jointly cover every column hit by the matrix.
bool is_cover(const ProfileMatrix& m, const std::vector<std::size_t>& q);

WeightTable weights_from(const ProfileMatrix& m, const std::vector<std::size_t>& q);

nlohmann::json to_json(const ProfileMatrix& m);
/// Throws OptimizerError on a malformed or infeasible profile.
ProfileMatrix profile_from_json(const nlohmann::json& j);

}  // namespace mrvfuzz
