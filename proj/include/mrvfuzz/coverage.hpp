#pragma once

// Hardware-style coverage: probes declared up front in a manifest, each
// owning a fixed universe of points, recorded into mergeable bitsets.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mrvfuzz::cov {

enum class Metric : uint8_t {
  kStatement, kBranch, kCondition, kExpression, kToggle, kFsm, kMux, kCtrlReg,
};
inline constexpr std::size_t kNumMetrics = 8;

std::string_view name(Metric m);
std::optional<Metric> parse_metric(std::string_view s);

/// Bitmask over Metric.
class MetricSet {
 public:
  constexpr MetricSet() = default;
  constexpr MetricSet(std::initializer_list<Metric> ms) {
    for (Metric m : ms) insert(m);
  }
  constexpr void insert(Metric m) { bits_ |= 1u << static_cast<unsigned>(m); }
  constexpr bool contains(Metric m) const { return bits_ & (1u << static_cast<unsigned>(m)); }
  constexpr bool empty() const { return bits_ == 0; }
  friend constexpr bool operator==(MetricSet, MetricSet) = default;

  /// Comma-separated metric names; throws std::invalid_argument.
  static MetricSet parse(std::string_view list);
  std::string to_string() const;

 private:
  uint32_t bits_ = 0;
};

/// statement, branch, condition, expression, toggle, fsm.
MetricSet default_feedback_metrics();
MetricSet all_metrics();

class CoverageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct ProbeId {
  uint32_t v = 0;
  friend bool operator==(ProbeId, ProbeId) = default;
};

enum class Toggle : uint8_t { k01, k10, k0Z, k1Z, kZ0, kZ1 };

struct ProbeDecl {
  Metric metric;
  std::string unit;
  std::string block;  // design block the probe observes, "" if unassigned
  uint32_t offset = 0;
  uint32_t size = 0;
  // condition/expression inputs, toggle signal bits (as names or a count),
  // ctrlreg member registers
  std::vector<std::string> inputs;
  uint32_t width = 0;
  bool tristate = false;
  std::vector<std::string> fsm_states;
  std::vector<std::pair<uint8_t, uint8_t>> fsm_transitions;
};

struct CoveragePoint {
  Metric metric;
  std::string unit;
  uint32_t sub;
  friend bool operator==(const CoveragePoint&, const CoveragePoint&) = default;
};

inline constexpr uint32_t kMaxExpressionInputs = 6;
inline constexpr uint32_t kMaxCtrlRegWidth = 10;

class CoverageManifest {
 public:
  explicit CoverageManifest(std::string name) : name_(std::move(name)) {}

  ProbeId add_statement(std::string unit, std::string block = {});
  ProbeId add_branch(std::string unit, std::string block = {});
  ProbeId add_condition(std::string unit, std::vector<std::string> inputs, std::string block = {});
  ProbeId add_expression(std::string unit, std::vector<std::string> inputs, std::string block = {});
  ProbeId add_toggle(std::string unit, uint32_t bits, bool tristate, std::string block = {});
  ProbeId add_fsm(std::string unit, std::vector<std::string> states,
                  std::vector<std::pair<uint8_t, uint8_t>> transitions, std::string block = {});
  ProbeId add_mux(std::string unit, std::string block = {});
  ProbeId add_ctrlreg(std::string unit, std::vector<std::string> registers, std::string block = {});

  const std::string& name() const { return name_; }
  std::size_t total_points() const { return total_; }
  std::size_t num_probes() const { return probes_.size(); }
  const ProbeDecl& probe(ProbeId id) const { return probes_.at(id.v); }
  const std::vector<ProbeDecl>& probes() const { return probes_; }
  std::optional<ProbeId> find(std::string_view unit) const;

  CoveragePoint point(uint32_t index) const;
  std::string point_label(uint32_t index) const;
  /// Probe owning a global point index.
  const ProbeDecl& owner(uint32_t index) const;

  /// Universe size per metric, optionally restricted to one block.
  std::array<uint32_t, kNumMetrics> universe_per_metric(std::string_view block = {}) const;

  /// Canonical text form; the manifest id is its FNV-1a hash.
  std::string to_text() const;
  uint64_t id() const;

  /// Per-word mask selecting the points of the given metrics.
  std::vector<uint64_t> metric_mask(MetricSet metrics) const;

 private:
  ProbeId add(ProbeDecl d);

  std::string name_;
  std::vector<ProbeDecl> probes_;
  std::unordered_map<std::string, uint32_t> by_unit_;
  std::size_t total_ = 0;
  mutable std::optional<uint64_t> id_cache_;
};

struct MetricTotals {
  std::array<uint32_t, kNumMetrics> hit{};
  std::array<uint32_t, kNumMetrics> universe{};
};

class CoverageMap {
 public:
  explicit CoverageMap(std::shared_ptr<const CoverageManifest> manifest);

  const CoverageManifest& manifest() const { return *manifest_; }
  const std::shared_ptr<const CoverageManifest>& manifest_ptr() const { return manifest_; }
  uint64_t manifest_id() const { return manifest_id_; }

  void hit_statement(ProbeId p);
  void hit_branch(ProbeId p, bool taken);
  /// Condition/expression input vector; input 0 is the most significant bit.
  void hit_vector(ProbeId p, uint32_t vec);
  void hit_toggle(ProbeId p, uint32_t bit, Toggle t);
  void hit_fsm_state(ProbeId p, uint8_t state);
  void hit_fsm_transition(ProbeId p, uint8_t from, uint8_t to);
  void hit_mux(ProbeId p, bool select);
  void hit_ctrlreg(ProbeId p, uint32_t value);

  /// Records by unit name and point index within the probe's universe.
  void record(std::string_view unit, uint32_t sub);

  bool test(uint32_t index) const { return (words_[index >> 6] >> (index & 63)) & 1u; }
  void set(uint32_t index) { words_[index >> 6] |= uint64_t{1} << (index & 63); }
  std::size_t count() const;
  std::size_t count(const std::vector<uint64_t>& mask) const;
  const std::vector<uint64_t>& words() const { return words_; }
  void clear();

  /// Bitwise union; throws CoverageError on a manifest mismatch.
  void merge_from(const CoverageMap& other);

  friend bool operator==(const CoverageMap& a, const CoverageMap& b) {
    return a.manifest_id_ == b.manifest_id_ && a.words_ == b.words_;
  }

 private:
  const ProbeDecl& check(ProbeId p, Metric m) const;
  void set_in(const ProbeDecl& d, uint32_t sub);

  std::shared_ptr<const CoverageManifest> manifest_;
  uint64_t manifest_id_;
  std::vector<uint64_t> words_;
};

CoverageMap merge(const CoverageMap& a, const CoverageMap& b);

/// Points in `run` absent from `global`, as global indices.
std::vector<uint32_t> delta(const CoverageMap& global, const CoverageMap& run);
std::vector<uint32_t> delta(const CoverageMap& global, const CoverageMap& run,
                            const std::vector<uint64_t>& mask);
bool has_new(const CoverageMap& global, const CoverageMap& run, const std::vector<uint64_t>& mask);

MetricTotals totals(const CoverageMap& m);

/// Tracks per-bit transitions of a binary signal (up to 64 bits).
class ToggleTracker {
 public:
  ToggleTracker() = default;
  ToggleTracker(ProbeId probe, uint32_t bits, uint64_t initial = 0)
      : probe_(probe), bits_(bits), value_(initial) {}
  void sample(CoverageMap& map, uint64_t value);
  uint64_t value() const { return value_; }

 private:
  ProbeId probe_{};
  uint32_t bits_ = 0;
  uint64_t value_ = 0;
};

/// Coverage report: manifest hash, per-metric totals and growth curve.
nlohmann::json coverage_report_json(const CoverageMap& m,
                                    const std::vector<std::pair<uint64_t, uint64_t>>& curve);

}  // namespace mrvfuzz::cov
