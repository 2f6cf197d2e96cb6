#include "mrvfuzz/config.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>

#include "mrvfuzz/program.hpp"

namespace mrvfuzz {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_uint(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(std::string(key) + ": expected true or false");
}

}  // namespace

void Config::set(std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  try {
    if (key == "bugs.enabled") {
      bugs = BugConfig::parse(v);
    } else if (key == "fuzz.lanes") {
      lanes = parse_uint<unsigned>(key, v);
      if (lanes == 0) throw ConfigError("fuzz.lanes must be at least 1");
    } else if (key == "fuzz.max_inputs") {
      max_inputs = parse_uint<uint64_t>(key, v);
    } else if (key == "fuzz.max_instructions") {
      max_instructions = parse_uint<uint64_t>(key, v);
    } else if (key == "fuzz.max_seconds") {
      std::size_t used = 0;
      max_seconds = std::stod(std::string(v), &used);
      if (used != v.size() || max_seconds < 0) throw ConfigError("fuzz.max_seconds: expected a number >= 0");
    } else if (key == "fuzz.mutants_per_entry") {
      mutants_per_entry = parse_uint<uint32_t>(key, v);
      if (mutants_per_entry == 0) throw ConfigError("fuzz.mutants_per_entry must be at least 1");
    } else if (key == "fuzz.seeds") {
      seeds = parse_uint<uint32_t>(key, v);
      if (seeds == 0) throw ConfigError("fuzz.seeds must be at least 1");
    } else if (key == "fuzz.reseed_every") {
      reseed_every = parse_uint<uint32_t>(key, v);
    } else if (key == "fuzz.mode") {
      if (v == "feedback") mode = FuzzMode::kFeedback;
      else if (v == "random") mode = FuzzMode::kRandom;
      else throw ConfigError("fuzz.mode must be feedback or random");
    } else if (key == "fuzz.weights") {
      weights = std::string(v);
    } else if (key == "fuzz.stop_on_mismatch") {
      stop_on_mismatch = parse_bool(key, v);
    } else if (key == "dut.max_cycles") {
      max_cycles = parse_uint<uint64_t>(key, v);
      if (max_cycles == 0) throw ConfigError("dut.max_cycles must be at least 1");
    } else if (key == "feedback.metrics") {
      metrics = cov::MetricSet::parse(v);
    } else if (key == "profile.runs_per_pair") {
      runs_per_pair = parse_uint<uint32_t>(key, v);
      if (runs_per_pair == 0) throw ConfigError("profile.runs_per_pair must be at least 1");
    } else if (key == "rng.seed") {
      seed = parse_uint<uint64_t>(key, v);
    } else if (key == "paths.out") {
      out = std::string(v);
    } else {
      throw ConfigError("unknown config key: " + std::string(key));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

std::string Config::to_text() const {
  std::ostringstream os;
  os << "bugs.enabled = " << bugs.to_string() << '\n'
     << "fuzz.lanes = " << lanes << '\n'
     << "fuzz.max_inputs = " << max_inputs << '\n'
     << "fuzz.max_instructions = " << max_instructions << '\n'
     << "fuzz.max_seconds = " << max_seconds << '\n'
     << "fuzz.mutants_per_entry = " << mutants_per_entry << '\n'
     << "fuzz.seeds = " << seeds << '\n'
     << "fuzz.reseed_every = " << reseed_every << '\n'
     << "fuzz.mode = " << (mode == FuzzMode::kFeedback ? "feedback" : "random") << '\n'
     << "fuzz.weights = " << weights << '\n'
     << "fuzz.stop_on_mismatch = " << (stop_on_mismatch ? "true" : "false") << '\n'
     << "dut.max_cycles = " << max_cycles << '\n'
     << "feedback.metrics = " << metrics.to_string() << '\n'
     << "profile.runs_per_pair = " << runs_per_pair << '\n'
     << "rng.seed = " << seed << '\n'
     << "paths.out = " << out << '\n';
  return os.str();
}

nlohmann::json Config::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  std::istringstream in(to_text());
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    j[std::string(trim(std::string_view(line).substr(0, eq)))] =
        std::string(trim(std::string_view(line).substr(eq + 1)));
  }
  return j;
}

Config parse_config(std::string_view text) {
  Config c;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    c.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::vector<uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::filesystem::path output_dir(const Config& c) {
  if (const char* env = std::getenv("THEHUZZ_OUT"); env != nullptr && *env != '\0') return env;
  return c.out;
}

}  // namespace mrvfuzz
