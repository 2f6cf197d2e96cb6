// mrvfuzz: fuzz, profile, optimize, replay, cov-report, casestudy, witnesses,
// manifest.
// Exit codes: 0 clean, 10 mismatch found, 2 usage/config/input error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mrvfuzz/casestudy.hpp"
#include "mrvfuzz/config.hpp"
#include "mrvfuzz/engine.hpp"
#include "mrvfuzz/optimizer.hpp"
#include "mrvfuzz/witnesses.hpp"

namespace fs = std::filesystem;
using namespace mrvfuzz;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitUsage = 2;
constexpr int kExitMismatch = 10;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
};

Config effective_config(const CommonOpts& o) {
  Config c = o.config_path.empty() ? Config{} : load_config(o.config_path);
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override must be key=value: " + kv);
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return c;
}

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("-c,--config", o.config_path, "key=value config file");
  sub->add_option("-s,--set", o.overrides, "config override, key=value (repeatable)");
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

int cmd_fuzz(const CommonOpts& o) {
  const Config c = effective_config(o);
  const WeightTable w = c.weights.empty() ? WeightTable::uniform() : read_weights(c.weights);
  const fs::path out = output_dir(c);
  const CampaignReport r = fuzz_loop(c, w);
  write_campaign(r, out);
  std::printf("inputs=%llu runs=%llu retired_tis=%llu mismatches=%zu hangs=%zu coverage=%llu wall=%.2fs\n",
              static_cast<unsigned long long>(r.inputs), static_cast<unsigned long long>(r.runs),
              static_cast<unsigned long long>(r.instructions), r.mismatches.size(), r.hangs.size(),
              static_cast<unsigned long long>(r.combined_hits()), r.wall_seconds);
  if (const auto first = r.first_mismatch_instructions()) {
    const MismatchReport& m = r.mismatches.front();
    std::printf("first mismatch: %s at event %llu after %llu retired TIs (%s)\n",
                std::string(name(m.mismatch.field)).c_str(), static_cast<unsigned long long>(m.mismatch.event_index),
                static_cast<unsigned long long>(*first), m.program_path.c_str());
  }
  std::printf("artifacts: %s\n", out.string().c_str());
  return r.mismatches.empty() ? kExitClean : kExitMismatch;
}

int cmd_profile(const CommonOpts& o, const std::string& out_path) {
  const Config c = effective_config(o);
  const ProfileMatrix m = profile(c.runs_per_pair, c.seed, c.lanes, c.max_cycles);
  const fs::path path = out_path.empty() ? output_dir(c) / "profile.json" : fs::path(out_path);
  write_json(path, to_json(m));
  std::printf("rows=%zu points=%zu -> %s\n", m.num_rows(), m.num_points(), path.string().c_str());
  return kExitClean;
}

int cmd_optimize(const std::string& profile_path, const std::string& out_path, bool exact) {
  const ProfileMatrix m = profile_from_json(read_json(profile_path));
  const std::vector<std::size_t> q = exact ? exact_cover(m) : greedy_cover(m);
  if (!is_cover(m, q)) throw OptimizerError("selected pairs do not cover the profile");
  const WeightTable w = weights_from(m, q);
  const fs::path path = out_path.empty() ? fs::path(profile_path).parent_path() / "weights.json" : fs::path(out_path);
  write_json(path, to_json(w));
  std::printf("selected %zu of %zu pairs covering %zu points -> %s\n", q.size(), m.num_rows(), m.num_points(),
              path.string().c_str());
  for (std::size_t r : q) {
    const std::size_t p = m.pairs()[r];
    std::printf("  %s M%zu\n", std::string(isa::name(static_cast<isa::Mnemonic>(p / kNumMutations))).c_str(),
                p % kNumMutations);
  }
  return kExitClean;
}

int cmd_replay(const CommonOpts& o, const std::string& input, const std::string& bugs_flag, bool has_bugs_flag) {
  Config c = effective_config(o);
  if (has_bugs_flag) c.bugs = BugConfig::parse(bugs_flag);
  const std::vector<uint8_t> bytes = read_file(input);
  if (fs::path(input).extension() == ".ctl") {
    const std::vector<CtrlInput> seq = parse_ctl(std::string(bytes.begin(), bytes.end()));
    const ControllerRun golden = controller_run(seq, BugConfig{});
    const ControllerRun dut = controller_run(seq, c.bugs);
    static constexpr const char* kStates[] = {"IDLE", "FLUSH", "D_READ"};
    for (std::size_t k = 0; k < seq.size(); ++k) {
      const CtrlOutput& g = golden.outputs[k];
      const CtrlOutput& d = dut.outputs[k];
      const bool diff = !(g == d);
      std::printf("%3zu in=%02x  dut state=%-6s vld=%d | golden state=%-6s vld=%d%s\n", k, seq[k].bits(),
                  kStates[static_cast<int>(d.state)], d.vld, kStates[static_cast<int>(g.state)], g.vld,
                  diff ? "  <-- mismatch" : "");
      if (diff) return kExitMismatch;
    }
    std::printf("traces identical\n");
    return kExitClean;
  }
  const Program p = parse_thzi(bytes);
  const RunOutcome r = run_input(p, c.bugs, c.max_cycles);
  std::fputs(format_replay(r).c_str(), stdout);
  return r.mismatches.empty() ? kExitClean : kExitMismatch;
}

int cmd_cov_report(const CommonOpts& o, const std::vector<std::string>& inputs, const std::string& out_path) {
  const Config c = effective_config(o);
  std::vector<fs::path> files;
  for (const fs::path p : inputs) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().extension() == ".thzi") files.push_back(e.path());
      }
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  cov::CoverageMap acc(dut_manifest());
  std::vector<std::pair<uint64_t, uint64_t>> curve;
  uint64_t retired = 0;
  const auto mask = dut_manifest()->metric_mask(cov::default_feedback_metrics());
  for (const fs::path& f : files) {
    const RunOutcome r = run_input(read_thzi(f), c.bugs, c.max_cycles);
    acc.merge_from(r.coverage);
    retired += r.retired_tis;
    curve.emplace_back(retired, acc.count(mask));
  }
  const nlohmann::json j = cov::coverage_report_json(acc, curve);
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json(out_path, j);
  }
  return kExitClean;
}

int cmd_casestudy(uint64_t seed, bool json) {
  const CaseStudyReport r = run_casestudy(seed);
  if (json) {
    std::cout << to_json(r).dump(2) << "\n";
  } else {
    std::fputs(format_casestudy(r).c_str(), stdout);
  }
  return kExitClean;
}

int cmd_witnesses(const std::string& dir, bool check) {
  if (!dir.empty()) {
    write_witnesses(dir);
    std::printf("wrote %zu witnesses to %s\n", witness_catalog().size(), dir.c_str());
  }
  if (!check) return kExitClean;
  bool ok = true;
  for (const Witness& w : witness_catalog()) {
    const bool on = witness_mismatches(w, BugConfig::only(w.bug));
    const bool off = witness_mismatches(w, BugConfig{});
    ok = ok && on && !off;
    std::printf("%-18s on=%s off=%s\n", std::string(name(w.bug)).c_str(), on ? "mismatch" : "clean",
                off ? "mismatch" : "clean");
  }
  return ok ? kExitClean : kExitUsage;
}

int cmd_manifest(bool controller) {
  std::fputs((controller ? controller_manifest() : dut_manifest())->to_text().c_str(), stdout);
  return kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MiniRV-32 coverage-guided instruction fuzzer"};
  app.require_subcommand(1);

  CommonOpts fuzz_o, prof_o, replay_o, cov_o;
  std::string prof_out, opt_in, opt_out, replay_in, replay_bugs, cov_out, wit_dir;
  std::vector<std::string> cov_in;
  bool opt_exact = false, cs_json = false, wit_check = false, man_ctrl = false;
  uint64_t cs_seed = 42;

  auto* fuzz = app.add_subcommand("fuzz", "run a fuzzing campaign");
  add_common(fuzz, fuzz_o);

  auto* prof = app.add_subcommand("profile", "profile every (instruction, mutation) pair");
  add_common(prof, prof_o);
  prof->add_option("-o,--out", prof_out, "profile.json path");

  auto* opt = app.add_subcommand("optimize", "set-cover a profile into weights.json");
  opt->add_option("profile", opt_in, "profile.json")->required();
  opt->add_option("-o,--out", opt_out, "weights.json path");
  opt->add_flag("--exact", opt_exact, "minimum cover (at most 20 rows)");

  auto* replay = app.add_subcommand("replay", "replay a .thzi program or .ctl sequence");
  add_common(replay, replay_o);
  replay->add_option("input", replay_in, "input file")->required();
  auto* bugs_opt = replay->add_option("-b,--bugs", replay_bugs, "bug toggles, overrides bugs.enabled");

  auto* covr = app.add_subcommand("cov-report", "coverage of .thzi files or directories");
  add_common(covr, cov_o);
  covr->add_option("inputs", cov_in, "programs or directories")->required();
  covr->add_option("-o,--out", cov_out, "coverage.json path (stdout if omitted)");

  auto* cs = app.add_subcommand("casestudy", "controller metric comparison");
  cs->add_option("--seed", cs_seed, "rng seed");
  cs->add_flag("--json", cs_json, "print JSON");

  auto* wit = app.add_subcommand("witnesses", "write and/or check the bug witnesses");
  wit->add_option("-o,--out", wit_dir, "directory to write witness files to");
  wit->add_flag("--check", wit_check, "replay every witness with its toggle on and off");

  auto* man = app.add_subcommand("manifest", "print a coverage manifest");
  man->add_flag("--controller", man_ctrl, "case-study controller instead of the DUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitClean : kExitUsage;
  }

  try {
    if (*fuzz) return cmd_fuzz(fuzz_o);
    if (*prof) return cmd_profile(prof_o, prof_out);
    if (*opt) return cmd_optimize(opt_in, opt_out, opt_exact);
    if (*replay) return cmd_replay(replay_o, replay_in, replay_bugs, bugs_opt->count() > 0);
    if (*covr) return cmd_cov_report(cov_o, cov_in, cov_out);
    if (*cs) return cmd_casestudy(cs_seed, cs_json);
    if (*wit) return cmd_witnesses(wit_dir, wit_check);
    if (*man) return cmd_manifest(man_ctrl);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
