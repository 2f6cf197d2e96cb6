#include "mrvfuzz/controller.hpp"

#include <array>

namespace mrvfuzz {
namespace {

using cov::ProbeId;
using cov::Toggle;

struct CtrlProbes {
  std::shared_ptr<cov::CoverageManifest> manifest = std::make_shared<cov::CoverageManifest>("cs-controller");
  ProbeId when_sel2, mux_sel2;
  ProbeId cond_flush_en;
  ProbeId to_idle, to_flush, to_dread, when_sel1, mux_sel1;
  ProbeId expr_sel1;
  ProbeId state_toggle, state_fsm;
  ProbeId expr_vld;
  ProbeId reg_toggle, regs;

  CtrlProbes() {
    cov::CoverageManifest& m = *manifest;
    when_sel2 = m.add_branch("cs.when_flush_en", "1");
    mux_sel2 = m.add_mux("cs.mux_flush", "1");
    cond_flush_en = m.add_condition("cs.cond_flush_en", {"flush", "en"}, "2");
    to_idle = m.add_statement("cs.next_idle", "3");
    to_flush = m.add_statement("cs.next_flush", "3");
    to_dread = m.add_statement("cs.next_dread", "3");
    when_sel1 = m.add_branch("cs.when_debug_read", "3");
    mux_sel1 = m.add_mux("cs.mux_debug_read", "3");
    expr_sel1 = m.add_expression("cs.expr_debug_read", {"debug_en", "pass", "ipass"}, "4");
    state_toggle = m.add_toggle("cs.state", 3, true, "5");
    std::vector<std::pair<uint8_t, uint8_t>> all;
    for (uint8_t f = 0; f < 3; ++f) {
      for (uint8_t t = 0; t < 3; ++t) all.emplace_back(f, t);
    }
    state_fsm = m.add_fsm("cs.fsm", {"IDLE", "FLUSH", "D_READ"}, all, "5");
    expr_vld = m.add_expression("cs.expr_vld", {"debug_en", "flush", "en"}, "6");
    reg_toggle = m.add_toggle("cs.regs", 6, false, "7");
    regs = m.add_ctrlreg("cs.ctrl_regs", {"flush", "en", "debug_en", "pass", "ipass"}, "7");
  }
};

const CtrlProbes& probes() {
  static const CtrlProbes p;
  return p;
}

}  // namespace

std::shared_ptr<const cov::CoverageManifest> controller_manifest() { return probes().manifest; }

ControllerRun controller_run(const std::vector<CtrlInput>& inputs, BugConfig variant) {
  const CtrlProbes& p = probes();
  ControllerRun run{.outputs = {}, .coverage = cov::CoverageMap(p.manifest)};
  cov::CoverageMap& c = run.coverage;

  // -1 models the floating (Z) level of the state register after reset.
  std::array<int, 3> state_bits{-1, -1, -1};
  bool have_state = false;
  CtrlState state = CtrlState::kIdle;
  cov::ToggleTracker reg_tracker(p.reg_toggle, 6);

  for (const CtrlInput& in : inputs) {
    const bool sel2 = in.flush && in.en;
    const bool sel1 = variant.on(Bug::kCsB1) ? in.debug_en && (in.pass || in.ipass)
                                             : in.debug_en && in.pass && !in.ipass;
    const bool vld = variant.on(Bug::kCsB2) ? in.debug_en || (in.flush || in.en)
                                            : in.debug_en || (in.flush && in.en);

    c.hit_branch(p.when_sel2, sel2);
    c.hit_mux(p.mux_sel2, sel2);
    c.hit_vector(p.cond_flush_en, uint32_t{in.flush} << 1 | uint32_t{in.en});
    c.hit_branch(p.when_sel1, sel1);
    c.hit_mux(p.mux_sel1, sel1);
    c.hit_vector(p.expr_sel1, uint32_t{in.debug_en} << 2 | uint32_t{in.pass} << 1 | uint32_t{in.ipass});
    c.hit_vector(p.expr_vld, uint32_t{in.debug_en} << 2 | uint32_t{in.flush} << 1 | uint32_t{in.en});

    const CtrlState next = sel1 ? CtrlState::kDRead : sel2 ? CtrlState::kFlush : CtrlState::kIdle;
    c.hit_statement(next == CtrlState::kDRead ? p.to_dread : next == CtrlState::kFlush ? p.to_flush : p.to_idle);

    if (have_state) {
      c.hit_fsm_transition(p.state_fsm, static_cast<uint8_t>(state), static_cast<uint8_t>(next));
    }
    for (int b = 0; b < 3; ++b) {
      const int now = (static_cast<int>(next) >> b) & 1;
      const int was = state_bits[b];
      if (was == now) continue;
      const Toggle t = was < 0 ? (now ? Toggle::kZ1 : Toggle::kZ0) : (now ? Toggle::k01 : Toggle::k10);
      c.hit_toggle(p.state_toggle, static_cast<uint32_t>(b), t);
      state_bits[b] = now;
    }
    state = next;
    have_state = true;
    c.hit_fsm_state(p.state_fsm, static_cast<uint8_t>(state));

    reg_tracker.sample(c, uint64_t{in.bits()} << 1 | uint64_t{vld});
    c.hit_ctrlreg(p.regs, in.bits());
    run.outputs.push_back({state, vld});
  }
  return run;
}

}  // namespace mrvfuzz
