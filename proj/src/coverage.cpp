#include "mrvfuzz/coverage.hpp"

#include <bit>
#include <sstream>

#include "mrvfuzz/program.hpp"

namespace mrvfuzz::cov {
namespace {

constexpr std::array<std::string_view, kNumMetrics> kMetricNames{
    "statement", "branch", "condition", "expression", "toggle", "fsm", "mux", "ctrlreg",
};

constexpr std::array<std::string_view, 6> kToggleNames{"0->1", "1->0", "0->Z", "1->Z", "Z->0", "Z->1"};

std::size_t words_for(std::size_t points) { return (points + 63) / 64; }

}  // namespace

std::string_view name(Metric m) { return kMetricNames[static_cast<std::size_t>(m)]; }

std::optional<Metric> parse_metric(std::string_view s) {
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (kMetricNames[i] == s) return static_cast<Metric>(i);
  }
  return std::nullopt;
}

MetricSet MetricSet::parse(std::string_view list) {
  MetricSet out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    std::string_view item = list.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      const auto m = parse_metric(item);
      if (!m) throw std::invalid_argument("unknown coverage metric: " + std::string(item));
      out.insert(*m);
    }
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty coverage metric list");
  return out;
}

std::string MetricSet::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (!contains(static_cast<Metric>(i))) continue;
    if (!s.empty()) s += ',';
    s += kMetricNames[i];
  }
  return s;
}

MetricSet default_feedback_metrics() {
  return {Metric::kStatement, Metric::kBranch, Metric::kCondition,
          Metric::kExpression, Metric::kToggle, Metric::kFsm};
}

MetricSet all_metrics() {
  MetricSet s = default_feedback_metrics();
  s.insert(Metric::kMux);
  s.insert(Metric::kCtrlReg);
  return s;
}

// ---------------------------------------------------------------------------
// Manifest

ProbeId CoverageManifest::add(ProbeDecl d) {
  if (by_unit_.contains(d.unit)) throw CoverageError("duplicate coverage unit: " + d.unit);
  d.offset = static_cast<uint32_t>(total_);
  total_ += d.size;
  const auto id = static_cast<uint32_t>(probes_.size());
  by_unit_.emplace(d.unit, id);
  probes_.push_back(std::move(d));
  id_cache_.reset();
  return ProbeId{id};
}

ProbeId CoverageManifest::add_statement(std::string unit, std::string block) {
  return add({.metric = Metric::kStatement, .unit = std::move(unit), .block = std::move(block), .size = 1});
}

ProbeId CoverageManifest::add_branch(std::string unit, std::string block) {
  return add({.metric = Metric::kBranch, .unit = std::move(unit), .block = std::move(block), .size = 2});
}

ProbeId CoverageManifest::add_condition(std::string unit, std::vector<std::string> inputs,
                                        std::string block) {
  if (inputs.empty() || inputs.size() > kMaxExpressionInputs) {
    throw CoverageError("condition probe needs 1.." + std::to_string(kMaxExpressionInputs) + " inputs");
  }
  const auto n = static_cast<uint32_t>(inputs.size());
  return add({.metric = Metric::kCondition, .unit = std::move(unit), .block = std::move(block),
              .size = 1u << n, .inputs = std::move(inputs), .width = n});
}

ProbeId CoverageManifest::add_expression(std::string unit, std::vector<std::string> inputs,
                                         std::string block) {
  if (inputs.empty() || inputs.size() > kMaxExpressionInputs) {
    throw CoverageError("expression probe needs 1.." + std::to_string(kMaxExpressionInputs) + " inputs");
  }
  const auto n = static_cast<uint32_t>(inputs.size());
  return add({.metric = Metric::kExpression, .unit = std::move(unit), .block = std::move(block),
              .size = 1u << n, .inputs = std::move(inputs), .width = n});
}

ProbeId CoverageManifest::add_toggle(std::string unit, uint32_t bits, bool tristate, std::string block) {
  if (bits == 0 || bits > 64) throw CoverageError("toggle probe width must be 1..64");
  return add({.metric = Metric::kToggle, .unit = std::move(unit), .block = std::move(block),
              .size = bits * (tristate ? 6u : 2u), .width = bits, .tristate = tristate});
}

ProbeId CoverageManifest::add_fsm(std::string unit, std::vector<std::string> states,
                                  std::vector<std::pair<uint8_t, uint8_t>> transitions,
                                  std::string block) {
  if (states.empty() || states.size() > 255) throw CoverageError("fsm probe needs 1..255 states");
  for (const auto& [from, to] : transitions) {
    if (from >= states.size() || to >= states.size()) throw CoverageError("fsm transition out of range");
  }
  const auto size = static_cast<uint32_t>(states.size() + transitions.size());
  return add({.metric = Metric::kFsm, .unit = std::move(unit), .block = std::move(block), .size = size,
              .fsm_states = std::move(states), .fsm_transitions = std::move(transitions)});
}

ProbeId CoverageManifest::add_mux(std::string unit, std::string block) {
  return add({.metric = Metric::kMux, .unit = std::move(unit), .block = std::move(block), .size = 2});
}

ProbeId CoverageManifest::add_ctrlreg(std::string unit, std::vector<std::string> registers,
                                      std::string block) {
  if (registers.empty() || registers.size() > kMaxCtrlRegWidth) {
    throw CoverageError("control-register group width must be 1.." + std::to_string(kMaxCtrlRegWidth));
  }
  const auto w = static_cast<uint32_t>(registers.size());
  return add({.metric = Metric::kCtrlReg, .unit = std::move(unit), .block = std::move(block),
              .size = 1u << w, .inputs = std::move(registers), .width = w});
}

std::optional<ProbeId> CoverageManifest::find(std::string_view unit) const {
  const auto it = by_unit_.find(std::string(unit));
  if (it == by_unit_.end()) return std::nullopt;
  return ProbeId{it->second};
}

const ProbeDecl& CoverageManifest::owner(uint32_t index) const {
  if (index >= total_) throw CoverageError("coverage point index out of range");
  // Probes are laid out contiguously in declaration order.
  auto it = std::upper_bound(probes_.begin(), probes_.end(), index,
                             [](uint32_t i, const ProbeDecl& d) { return i < d.offset; });
  return *std::prev(it);
}

CoveragePoint CoverageManifest::point(uint32_t index) const {
  const ProbeDecl& d = owner(index);
  return {d.metric, d.unit, index - d.offset};
}

std::string CoverageManifest::point_label(uint32_t index) const {
  const ProbeDecl& d = owner(index);
  const uint32_t sub = index - d.offset;
  std::ostringstream os;
  os << cov::name(d.metric) << ':' << d.unit << ':';
  switch (d.metric) {
    case Metric::kStatement: os << "hit"; break;
    case Metric::kBranch: os << (sub == 0 ? "taken" : "not-taken"); break;
    case Metric::kMux: os << "sel=" << sub; break;
    case Metric::kCondition:
    case Metric::kExpression:
    case Metric::kCtrlReg:
      for (uint32_t i = 0; i < d.width; ++i) os << ((sub >> (d.width - 1 - i)) & 1u);
      break;
    case Metric::kToggle: {
      const uint32_t per = d.tristate ? 6 : 2;
      os << "bit" << sub / per << ' ' << kToggleNames[sub % per];
      break;
    }
    case Metric::kFsm:
      if (sub < d.fsm_states.size()) {
        os << "state " << d.fsm_states[sub];
      } else {
        const auto& [from, to] = d.fsm_transitions[sub - d.fsm_states.size()];
        os << d.fsm_states[from] << "->" << d.fsm_states[to];
      }
      break;
  }
  return os.str();
}

std::array<uint32_t, kNumMetrics> CoverageManifest::universe_per_metric(std::string_view block) const {
  std::array<uint32_t, kNumMetrics> out{};
  for (const ProbeDecl& d : probes_) {
    if (!block.empty() && d.block != block) continue;
    out[static_cast<std::size_t>(d.metric)] += d.size;
  }
  return out;
}

std::string CoverageManifest::to_text() const {
  std::ostringstream os;
  os << "manifest " << name_ << " points=" << total_ << '\n';
  for (const ProbeDecl& d : probes_) {
    os << cov::name(d.metric) << ' ' << d.unit << " size=" << d.size;
    if (!d.block.empty()) os << " block=" << d.block;
    switch (d.metric) {
      case Metric::kCondition:
      case Metric::kExpression:
      case Metric::kCtrlReg:
        os << " inputs=";
        for (std::size_t i = 0; i < d.inputs.size(); ++i) os << (i ? "," : "") << d.inputs[i];
        break;
      case Metric::kToggle:
        os << " bits=" << d.width << (d.tristate ? " tristate" : "");
        break;
      case Metric::kFsm:
        os << " states=";
        for (std::size_t i = 0; i < d.fsm_states.size(); ++i) os << (i ? "," : "") << d.fsm_states[i];
        os << " transitions=";
        for (std::size_t i = 0; i < d.fsm_transitions.size(); ++i) {
          os << (i ? "," : "") << d.fsm_states[d.fsm_transitions[i].first] << ">"
             << d.fsm_states[d.fsm_transitions[i].second];
        }
        break;
      default:
        break;
    }
    os << '\n';
  }
  return os.str();
}

uint64_t CoverageManifest::id() const {
  if (!id_cache_) {
    const std::string text = to_text();
    id_cache_ = fnv1a64(std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
  }
  return *id_cache_;
}

std::vector<uint64_t> CoverageManifest::metric_mask(MetricSet metrics) const {
  std::vector<uint64_t> mask(words_for(total_), 0);
  for (const ProbeDecl& d : probes_) {
    if (!metrics.contains(d.metric)) continue;
    for (uint32_t i = d.offset; i < d.offset + d.size; ++i) mask[i >> 6] |= uint64_t{1} << (i & 63);
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Map

CoverageMap::CoverageMap(std::shared_ptr<const CoverageManifest> manifest)
    : manifest_(std::move(manifest)),
      manifest_id_(manifest_->id()),
      words_(words_for(manifest_->total_points()), 0) {}

const ProbeDecl& CoverageMap::check(ProbeId p, Metric m) const {
  if (p.v >= manifest_->num_probes()) throw CoverageError("undeclared coverage probe");
  const ProbeDecl& d = manifest_->probe(p);
  if (d.metric != m) {
    throw CoverageError("probe " + d.unit + " is " + std::string(name(d.metric)) + ", not " +
                        std::string(name(m)));
  }
  return d;
}

void CoverageMap::set_in(const ProbeDecl& d, uint32_t sub) {
  if (sub >= d.size) throw CoverageError("observation outside the universe of " + d.unit);
  set(d.offset + sub);
}

void CoverageMap::hit_statement(ProbeId p) { set_in(check(p, Metric::kStatement), 0); }

void CoverageMap::hit_branch(ProbeId p, bool taken) {
  set_in(check(p, Metric::kBranch), taken ? 0 : 1);
}

void CoverageMap::hit_vector(ProbeId p, uint32_t vec) {
  if (p.v >= manifest_->num_probes()) throw CoverageError("undeclared coverage probe");
  const ProbeDecl& d = manifest_->probe(p);
  if (d.metric != Metric::kCondition && d.metric != Metric::kExpression) {
    throw CoverageError("probe " + d.unit + " takes no input vector");
  }
  set_in(d, vec);
}

void CoverageMap::hit_toggle(ProbeId p, uint32_t bit, Toggle t) {
  const ProbeDecl& d = check(p, Metric::kToggle);
  const auto kind = static_cast<uint32_t>(t);
  if (!d.tristate && kind > 1) throw CoverageError("Z transition on binary signal " + d.unit);
  if (bit >= d.width) throw CoverageError("toggle bit outside " + d.unit);
  set_in(d, bit * (d.tristate ? 6 : 2) + kind);
}

void CoverageMap::hit_fsm_state(ProbeId p, uint8_t state) {
  const ProbeDecl& d = check(p, Metric::kFsm);
  if (state >= d.fsm_states.size()) throw CoverageError("undeclared state in " + d.unit);
  set_in(d, state);
}

void CoverageMap::hit_fsm_transition(ProbeId p, uint8_t from, uint8_t to) {
  const ProbeDecl& d = check(p, Metric::kFsm);
  for (std::size_t i = 0; i < d.fsm_transitions.size(); ++i) {
    if (d.fsm_transitions[i] == std::pair{from, to}) {
      set_in(d, static_cast<uint32_t>(d.fsm_states.size() + i));
      return;
    }
  }
  throw CoverageError("undeclared transition in " + d.unit);
}

void CoverageMap::hit_mux(ProbeId p, bool select) { set_in(check(p, Metric::kMux), select ? 1 : 0); }

void CoverageMap::hit_ctrlreg(ProbeId p, uint32_t value) { set_in(check(p, Metric::kCtrlReg), value); }

void CoverageMap::record(std::string_view unit, uint32_t sub) {
  const auto p = manifest_->find(unit);
  if (!p) throw CoverageError("undeclared coverage unit: " + std::string(unit));
  set_in(manifest_->probe(*p), sub);
}

std::size_t CoverageMap::count() const {
  std::size_t n = 0;
  for (uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::size_t CoverageMap::count(const std::vector<uint64_t>& mask) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < words_.size(); ++i) n += static_cast<std::size_t>(std::popcount(words_[i] & mask[i]));
  return n;
}

void CoverageMap::clear() { std::fill(words_.begin(), words_.end(), 0); }

void CoverageMap::merge_from(const CoverageMap& other) {
  if (other.manifest_id_ != manifest_id_) throw CoverageError("coverage manifest mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
}

CoverageMap merge(const CoverageMap& a, const CoverageMap& b) {
  CoverageMap out = a;
  out.merge_from(b);
  return out;
}

std::vector<uint32_t> delta(const CoverageMap& global, const CoverageMap& run,
                            const std::vector<uint64_t>& mask) {
  if (global.manifest_id() != run.manifest_id()) throw CoverageError("coverage manifest mismatch");
  std::vector<uint32_t> out;
  const auto& g = global.words();
  const auto& r = run.words();
  for (std::size_t i = 0; i < r.size(); ++i) {
    uint64_t fresh = r[i] & ~g[i] & mask[i];
    while (fresh) {
      const int b = std::countr_zero(fresh);
      out.push_back(static_cast<uint32_t>(i * 64 + b));
      fresh &= fresh - 1;
    }
  }
  return out;
}

std::vector<uint32_t> delta(const CoverageMap& global, const CoverageMap& run) {
  return delta(global, run, std::vector<uint64_t>(run.words().size(), ~uint64_t{0}));
}

bool has_new(const CoverageMap& global, const CoverageMap& run, const std::vector<uint64_t>& mask) {
  if (global.manifest_id() != run.manifest_id()) throw CoverageError("coverage manifest mismatch");
  const auto& g = global.words();
  const auto& r = run.words();
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] & ~g[i] & mask[i]) return true;
  }
  return false;
}

MetricTotals totals(const CoverageMap& m) {
  MetricTotals t;
  for (const ProbeDecl& d : m.manifest().probes()) {
    const auto k = static_cast<std::size_t>(d.metric);
    t.universe[k] += d.size;
    for (uint32_t i = d.offset; i < d.offset + d.size; ++i) t.hit[k] += m.test(i) ? 1 : 0;
  }
  return t;
}

void ToggleTracker::sample(CoverageMap& map, uint64_t value) {
  uint64_t changed = value ^ value_;
  if (bits_ < 64) changed &= (uint64_t{1} << bits_) - 1;
  while (changed) {
    const int b = std::countr_zero(changed);
    const bool now = (value >> b) & 1u;
    map.hit_toggle(probe_, static_cast<uint32_t>(b), now ? Toggle::k01 : Toggle::k10);
    changed &= changed - 1;
  }
  value_ = value;
}

nlohmann::json coverage_report_json(const CoverageMap& m,
                                    const std::vector<std::pair<uint64_t, uint64_t>>& curve) {
  using nlohmann::json;
  const MetricTotals t = totals(m);
  json per = json::object();
  uint64_t hit = 0, universe = 0;
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    per[std::string(kMetricNames[i])] = {{"hit", t.hit[i]}, {"universe", t.universe[i]}};
    hit += t.hit[i];
    universe += t.universe[i];
  }
  json samples = json::array();
  for (const auto& [instr, hits] : curve) samples.push_back({instr, hits});
  json unhit = json::array();
  for (uint32_t i = 0; i < m.manifest().total_points(); ++i) {
    if (!m.test(i)) unhit.push_back(m.manifest().point_label(i));
  }
  return {{"manifest", m.manifest().name()},
          {"manifest_hash", hash_hex(m.manifest_id())},
          {"totals", per},
          {"combined", {{"hit", hit}, {"universe", universe}}},
          {"curve", samples},
          {"unhit", unhit}};
}

}  // namespace mrvfuzz::cov
