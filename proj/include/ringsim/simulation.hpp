#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ringsim/controllers.hpp"
#include "ringsim/ring.hpp"
#include "ringsim/supervisor.hpp"
#include "ringsim/types.hpp"
#include "ringsim/vehicle_model.hpp"

namespace ringsim {

struct SwitchEvent {
  double t = 0.0;
  int vehicle = 0;  // 0-based
  Mode from = Mode::Cruise;
  Mode to = Mode::Following;
  SwitchReason reason = SwitchReason::ThresholdCrossed;
  double delta_at_switch = 0.0;  // spacing error at the base headway, NaN for exits
};

struct CoordinationEvent {
  double t = 0.0;
  int vehicle = 0;
  SwitchReason tag = SwitchReason::CoordinationSlowdown;
  double speed_limit = 0.0;  // V_s after the event
};

// Time-indexed record of one run. Uniform grid with spacing dt; one series
// per vehicle, all of equal length.
struct TrajectoryLog {
  int vehicle_count = 0;
  double dt = 0.0;
  double perimeter = 0.0;
  double vehicle_length = 0.0;
  double base_headway = 0.0;
  double standstill = 0.0;
  double free_flow_speed = 0.0;

  std::vector<double> time;
  struct Series {
    std::vector<double> x, v, a, u, w, v_r, y, delta, speed_limit, h_now;
    std::vector<Mode> mode;
  };
  std::vector<Series> veh;

  std::vector<SwitchEvent> switches;
  std::vector<CoordinationEvent> coordination;
  std::vector<std::string> notes;

  size_t samples() const { return time.size(); }
};

namespace detail {
constexpr int kSlots = 5;  // x, v, a|F, w, v_r
}

// Full simulation state plus supervisor bookkeeping and RK4 scratch space.
struct World {
  RingScenario scenario;
  int64_t step_count = 0;
  double t = 0.0;
  std::vector<VehicleState> states;
  std::vector<ModeState> modes;
  bool plan_issued = false;
  std::vector<SwitchEvent> switch_events;
  std::vector<CoordinationEvent> coordination_events;
  std::vector<std::string> notes;
  std::vector<uint8_t> negative_speed_noted;

  // scratch
  std::vector<double> s_, k1_, k2_, k3_, k4_, stage_, accel_;
};

struct VehicleOutputs {
  double u = 0.0, dw = 0.0, dv_r = 0.0;
  double y = 0.0, delta = 0.0, v_r_eff = 0.0, h_now = 0.0;
};

namespace detail {

inline double slot(const std::vector<double>& s, int i, int k) {
  return s[static_cast<size_t>(i) * kSlots + static_cast<size_t>(k)];
}

// Controller evaluation for one vehicle from raw state slots at time t.
inline VehicleOutputs evaluate_vehicle(const World& w, double t,
                                       const std::vector<double>& s,
                                       const std::vector<double>& accel, int i) {
  const RingScenario& sc = w.scenario;
  const ControllerGains& g = sc.gains;
  const int n = sc.count;
  const int lead = lead_index(i, n);

  VehicleOutputs out;
  out.y = gap(slot(s, i, 0), slot(s, lead, 0), sc.vehicle.length, sc.perimeter,
              wraps(i, n));

  VehicleState ego;
  ego.x = slot(s, i, 0);
  ego.v = slot(s, i, 1);
  ego.a = accel[static_cast<size_t>(i)];
  ego.w = slot(s, i, 3);
  ego.v_r = slot(s, i, 4);

  const ModeState& ms = w.modes[static_cast<size_t>(i)];
  out.h_now = headway_now(ms.headway, t);
  out.delta = spacing_error(out.y, ego.v, out.h_now, g.S_0);

  if (ms.mode == Mode::Following) {
    const double v_l = slot(s, lead, 1);
    const double a_l = accel[static_cast<size_t>(lead)];
    out.v_r_eff = following_reference_speed(v_l, ms.v_r_at_switch, g.lambda,
                                            t - ms.entry_time);
    const ControlInput ci = following_control(
        ego, a_l, out.delta, out.v_r_eff, ms.effective_gains(g.lambda, t), g);
    out.u = ci.u;
    out.dw = ci.dw;
    out.dv_r = 0.0;
  } else {
    out.v_r_eff = ego.v_r;
    const ControlInput ci = cruise_control(ego, ms.speed_limit, g);
    out.u = ci.u;
    out.dw = ci.dw;
    out.dv_r = ci.dv_r;
  }
  return out;
}

inline void derive_accels(const World& w, const std::vector<double>& s,
                          std::vector<double>& accel) {
  const int n = w.scenario.count;
  if (w.scenario.fidelity == Fidelity::Linearized) {
    for (int i = 0; i < n; ++i) accel[static_cast<size_t>(i)] = slot(s, i, 2);
  } else {
    const VehicleParams& vp = w.scenario.vehicle;
    for (int i = 0; i < n; ++i) {
      const double v = slot(s, i, 1);
      const double F = slot(s, i, 2);
      accel[static_cast<size_t>(i)] =
          (F - vp.drag_coeff * v * v - vp.friction(v)) / vp.mass;
    }
  }
}

inline void eval_derivative(World& w, double t, const std::vector<double>& s,
                            std::vector<double>& ds) {
  const int n = w.scenario.count;
  derive_accels(w, s, w.accel_);
  for (int i = 0; i < n; ++i) {
    const VehicleOutputs o = evaluate_vehicle(w, t, s, w.accel_, i);
    const size_t b = static_cast<size_t>(i) * kSlots;
    ds[b + 0] = slot(s, i, 1);
    ds[b + 1] = w.accel_[static_cast<size_t>(i)];
    if (w.scenario.fidelity == Fidelity::Linearized) {
      ds[b + 2] = o.u;
    } else {
      VehicleState tmp;
      tmp.v = slot(s, i, 1);
      tmp.a = w.accel_[static_cast<size_t>(i)];
      const double throttle = feedback_linearize(tmp, o.u, w.scenario.vehicle);
      ds[b + 2] = (throttle - slot(s, i, 2)) / w.scenario.vehicle.tau(tmp.v);
    }
    ds[b + 3] = o.dw;
    ds[b + 4] = o.dv_r;
  }
}

inline void pack(const World& w, std::vector<double>& s) {
  const bool full = w.scenario.fidelity == Fidelity::FullNonlinear;
  for (int i = 0; i < w.scenario.count; ++i) {
    const VehicleState& v = w.states[static_cast<size_t>(i)];
    const size_t b = static_cast<size_t>(i) * kSlots;
    s[b + 0] = v.x;
    s[b + 1] = v.v;
    s[b + 2] = full ? v.F : v.a;
    s[b + 3] = v.w;
    s[b + 4] = v.v_r;
  }
}

inline void unpack(World& w, const std::vector<double>& s) {
  const bool full = w.scenario.fidelity == Fidelity::FullNonlinear;
  const VehicleParams& vp = w.scenario.vehicle;
  for (int i = 0; i < w.scenario.count; ++i) {
    VehicleState& v = w.states[static_cast<size_t>(i)];
    const size_t b = static_cast<size_t>(i) * kSlots;
    v.x = s[b + 0];
    v.v = s[b + 1];
    if (full) {
      v.F = s[b + 2];
      v.a = (v.F - vp.drag_coeff * v.v * v.v - vp.friction(v.v)) / vp.mass;
    } else {
      v.a = s[b + 2];
    }
    v.w = s[b + 3];
    v.v_r = s[b + 4];
  }
}

inline void apply_following_entry(World& w, int i, SwitchReason reason,
                                  double cp_target, double cq_target,
                                  double h_target) {
  const ControllerGains& g = w.scenario.gains;
  ModeState& ms = w.modes[static_cast<size_t>(i)];
  VehicleState& st = w.states[static_cast<size_t>(i)];
  const double t = w.t;
  const double y = gap_of(w.states, i, w.scenario.vehicle.length, w.scenario.perimeter);

  w.switch_events.push_back({t, i, ms.mode, Mode::Following, reason,
                             spacing_error(y, st.v, g.h, g.S_0)});
  ms.mode = Mode::Following;
  ms.entry_time = t;
  ms.v_r_at_switch = st.v_r;
  st.w = 0.0;
  ms.cp = {0.0, cp_target};
  ms.cq = {0.0, cq_target};
  const double v2v = w.scenario.v2v_enabled ? 1.0 : 0.0;
  ms.ca = {0.0, v2v * g.C_a};
  ms.cb = {0.0, v2v * g.C_b};
  ms.gain_ramp_start = t;
  ms.headway = {g.h, h_target, g.lambda, t};
  ms.out_of_range_since = std::numeric_limits<double>::infinity();
  ms.switch_count += 1;
}

inline void apply_cruise_exit(World& w, int i, SwitchReason reason) {
  ModeState& ms = w.modes[static_cast<size_t>(i)];
  w.switch_events.push_back({w.t, i, ms.mode, Mode::Cruise, reason,
                             std::numeric_limits<double>::quiet_NaN()});
  ms.mode = Mode::Cruise;
  ms.entry_time = w.t;
  w.states[static_cast<size_t>(i)].w = 0.0;  // v_r stays, keeping u continuous
  ms.out_of_range_since = std::numeric_limits<double>::infinity();
  ms.switch_count += 1;
}

// Retarget (or enter) vehicle following with a coordination headway. A vehicle
// already following keeps its integral state and ramps from the current
// values; a cruising vehicle is switched in with gains ramped from zero.
inline void start_spacing_adjustment(World& w, int i, double h_target) {
  const ControllerGains& g = w.scenario.gains;
  const double cp_target = g.h * g.C_p / h_target;
  const double cq_target = g.h * g.C_q / h_target;
  ModeState& ms = w.modes[static_cast<size_t>(i)];
  const double t = w.t;
  if (ms.mode == Mode::Following) {
    const EffectiveGains eg = ms.effective_gains(g.lambda, t);
    ms.cp = {eg.c_p, cp_target};
    ms.cq = {eg.c_q, cq_target};
    ms.ca = {eg.c_a, ms.ca.target};
    ms.cb = {eg.c_b, ms.cb.target};
    ms.gain_ramp_start = t;
    ms.headway = {headway_now(ms.headway, t), h_target, g.lambda, t};
    const int lead = lead_index(i, w.scenario.count);
    ms.v_r_at_switch = following_reference_speed(
        w.states[static_cast<size_t>(lead)].v, ms.v_r_at_switch, g.lambda,
        t - ms.entry_time);
    ms.entry_time = t;
  } else {
    apply_following_entry(w, i, SwitchReason::CoordinationResume, cp_target,
                          cq_target, h_target);
  }
  ms.coord_adjusting = true;
}

inline void resume_leader(World& w, int leader) {
  const RingScenario& sc = w.scenario;
  ModeState& ms = w.modes[static_cast<size_t>(leader)];
  ms.platoon_formed = true;
  ms.speed_limit = sc.free_flow_speed;
  w.coordination_events.push_back(
      {w.t, leader, SwitchReason::CoordinationResume, ms.speed_limit});
  if (sc.plan->kind == CoordKind::MPlatoonSymmetrical) {
    const double h_m =
        desired_headway(*sc.plan, sc.perimeter, sc.count, sc.vehicle.length,
                        sc.gains.S_0, sc.free_flow_speed, sc.gains.h,
                        CoordRole::DesiredLeader);
    start_spacing_adjustment(w, leader, h_m);
  }
}

inline void issue_plan(World& w) {
  const RingScenario& sc = w.scenario;
  const CoordinationPlan& plan = *sc.plan;
  for (int i = 0; i < sc.count; ++i)
    w.modes[static_cast<size_t>(i)].role = CoordRole::Follower;
  for (int l : plan.leaders)
    w.modes[static_cast<size_t>(l)].role = CoordRole::DesiredLeader;

  if (plan.kind == CoordKind::Symmetrical) {
    const double h_d =
        desired_headway(plan, sc.perimeter, sc.count, sc.vehicle.length,
                        sc.gains.S_0, sc.free_flow_speed, sc.gains.h,
                        CoordRole::Follower);
    for (int i = 0; i < sc.count; ++i) {
      start_spacing_adjustment(w, i, h_d);
      w.coordination_events.push_back(
          {w.t, i, SwitchReason::CoordinationResume,
           w.modes[static_cast<size_t>(i)].speed_limit});
    }
  } else {
    for (int l : plan.leaders) {
      if (platoon_formed_behind(w.modes, plan, l)) {
        resume_leader(w, l);
      } else {
        ModeState& ms = w.modes[static_cast<size_t>(l)];
        ms.speed_limit = coordination_speed_limit(plan, false, sc.free_flow_speed);
        w.coordination_events.push_back(
            {w.t, l, SwitchReason::CoordinationSlowdown, ms.speed_limit});
      }
    }
  }
  w.plan_issued = true;
}

}  // namespace detail

inline World make_world(const RingScenario& scenario) {
  scenario.validate();
  World w;
  w.scenario = scenario;
  const int n = scenario.count;
  const ControllerGains& g = scenario.gains;

  const auto xs =
      positions_from_gaps(0.0, scenario.initial_gaps, scenario.vehicle.length);
  w.states.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    VehicleState& s = w.states[static_cast<size_t>(i)];
    s.x = xs[static_cast<size_t>(i)];
    s.v = scenario.speed_of(i);
    s.a = scenario.accel_of(i);
    s.w = 0.0;
    s.v_r = s.v;
    s.F = force_balance(s.v, s.a, scenario.vehicle);
  }

  // Initial modes: a vehicle whose lead is in range at no more than the
  // switching distance starts as a member of an established platoon, with
  // ramps already settled.
  w.modes.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    ModeState& ms = w.modes[static_cast<size_t>(i)];
    ms.speed_limit = scenario.free_flow_speed;
    const double y = gap_of(w.states, i, scenario.vehicle.length, scenario.perimeter);
    const double v_l = w.states[static_cast<size_t>(lead_index(i, n))].v;
    const bool following = y <= scenario.sensing_range &&
                           y <= switching_threshold(w.states[static_cast<size_t>(i)].v, v_l, g) &&
                           v_l <= ms.speed_limit;
    if (following) {
      ms.mode = Mode::Following;
      ms.entry_time = kSettledTime;
      ms.v_r_at_switch = w.states[static_cast<size_t>(i)].v;
      ms.cp = {g.C_p, g.C_p};
      ms.cq = {g.C_q, g.C_q};
      const double v2v = scenario.v2v_enabled ? 1.0 : 0.0;
      ms.ca = {v2v * g.C_a, v2v * g.C_a};
      ms.cb = {v2v * g.C_b, v2v * g.C_b};
    } else {
      ms.mode = Mode::Cruise;
      ms.entry_time = 0.0;
    }
    ms.gain_ramp_start = 0.0;
    ms.headway = {g.h, g.h, g.lambda, 0.0};
  }

  const size_t dim = static_cast<size_t>(n) * detail::kSlots;
  w.s_.resize(dim);
  w.k1_.resize(dim);
  w.k2_.resize(dim);
  w.k3_.resize(dim);
  w.k4_.resize(dim);
  w.stage_.resize(dim);
  w.accel_.resize(static_cast<size_t>(n));
  w.negative_speed_noted.assign(static_cast<size_t>(n), 0);
  return w;
}

// Supervisor pass: coordination lifecycle first, then the per-vehicle mode
// rules, all decided from a snapshot and applied afterwards.
inline void supervise(World& w) {
  const RingScenario& sc = w.scenario;
  const ControllerGains& g = sc.gains;
  const int n = sc.count;
  const double t = w.t;

  if (sc.plan) {
    if (!w.plan_issued) {
      if (t >= sc.plan->issue_time - 0.5 * sc.dt) detail::issue_plan(w);
    } else if (sc.plan->kind != CoordKind::Symmetrical) {
      for (int l : sc.plan->leaders) {
        ModeState& ms = w.modes[static_cast<size_t>(l)];
        if (!ms.platoon_formed && platoon_formed_behind(w.modes, *sc.plan, l))
          detail::resume_leader(w, l);
      }
    }
  }

  std::vector<std::pair<int, SwitchDecision>> decisions;
  for (int i = 0; i < n; ++i) {
    const double y = gap_of(w.states, i, sc.vehicle.length, sc.perimeter);
    const int lead = lead_index(i, n);
    const double v_l = w.states[static_cast<size_t>(lead)].v;
    ModeState& ms = w.modes[static_cast<size_t>(i)];
    update_range_tracking(ms, y, sc.sensing_range, t);
    const auto decision = select_mode(
        ms, y, w.states[static_cast<size_t>(i)].v, v_l,
        w.modes[static_cast<size_t>(lead)].speed_limit,
        y <= sc.sensing_range, t, g);
    if (decision) decisions.emplace_back(i, *decision);
  }
  for (const auto& [i, d] : decisions) {
    if (d.new_mode == Mode::Following)
      detail::apply_following_entry(w, i, d.reason, g.C_p, g.C_q, g.h);
    else
      detail::apply_cruise_exit(w, i, d.reason);
  }
}

// One fixed-step RK4 update of the coupled closed loop, followed by the
// supervisor pass. Mode switches land on the step grid.
inline void step(World& w) {
  const int n = w.scenario.count;
  const double dt = w.scenario.dt;
  const double t = w.t;
  const size_t dim = w.s_.size();

  detail::pack(w, w.s_);
  detail::eval_derivative(w, t, w.s_, w.k1_);
  for (size_t j = 0; j < dim; ++j) w.stage_[j] = w.s_[j] + 0.5 * dt * w.k1_[j];
  detail::eval_derivative(w, t + 0.5 * dt, w.stage_, w.k2_);
  for (size_t j = 0; j < dim; ++j) w.stage_[j] = w.s_[j] + 0.5 * dt * w.k2_[j];
  detail::eval_derivative(w, t + 0.5 * dt, w.stage_, w.k3_);
  for (size_t j = 0; j < dim; ++j) w.stage_[j] = w.s_[j] + dt * w.k3_[j];
  detail::eval_derivative(w, t + dt, w.stage_, w.k4_);
  for (size_t j = 0; j < dim; ++j)
    w.s_[j] += dt / 6.0 * (w.k1_[j] + 2.0 * w.k2_[j] + 2.0 * w.k3_[j] + w.k4_[j]);

  detail::unpack(w, w.s_);
  w.step_count += 1;
  w.t = static_cast<double>(w.step_count) * dt;

  // While following, the reference filter state mirrors the closed-form
  // reference so a later switch back to cruise starts from it.
  for (int i = 0; i < n; ++i) {
    ModeState& ms = w.modes[static_cast<size_t>(i)];
    VehicleState& st = w.states[static_cast<size_t>(i)];
    if (ms.mode == Mode::Following) {
      const double v_l = w.states[static_cast<size_t>(lead_index(i, n))].v;
      st.v_r = following_reference_speed(v_l, ms.v_r_at_switch,
                                         w.scenario.gains.lambda,
                                         w.t - ms.entry_time);
    }
    if (!(std::isfinite(st.x) && std::isfinite(st.v) && std::isfinite(st.a) &&
          std::isfinite(st.w) && std::isfinite(st.v_r)))
      throw IntegrationError("state diverged at t=" + std::to_string(w.t) +
                             " for vehicle " + std::to_string(i + 1));
    if (st.v < -1e-9 && !w.negative_speed_noted[static_cast<size_t>(i)]) {
      w.negative_speed_noted[static_cast<size_t>(i)] = 1;
      w.notes.push_back("vehicle " + std::to_string(i + 1) +
                        " reached negative speed at t=" + std::to_string(w.t));
    }
  }

  supervise(w);
}

namespace detail {

inline void append_row(World& w, TrajectoryLog& log) {
  pack(w, w.s_);
  derive_accels(w, w.s_, w.accel_);
  log.time.push_back(w.t);
  for (int i = 0; i < w.scenario.count; ++i) {
    const VehicleOutputs o = evaluate_vehicle(w, w.t, w.s_, w.accel_, i);
    const VehicleState& st = w.states[static_cast<size_t>(i)];
    const ModeState& ms = w.modes[static_cast<size_t>(i)];
    TrajectoryLog::Series& se = log.veh[static_cast<size_t>(i)];
    se.x.push_back(st.x);
    se.v.push_back(st.v);
    se.a.push_back(st.a);
    se.u.push_back(o.u);
    se.w.push_back(st.w);
    se.v_r.push_back(o.v_r_eff);
    se.y.push_back(o.y);
    se.delta.push_back(o.delta);
    se.speed_limit.push_back(ms.speed_limit);
    se.h_now.push_back(o.h_now);
    se.mode.push_back(ms.mode);
  }
}

}  // namespace detail

// Runs a scenario from t=0 to t_end. Deterministic: identical inputs produce
// bit-identical logs.
inline TrajectoryLog run(const RingScenario& scenario) {
  World w = make_world(scenario);

  TrajectoryLog log;
  log.vehicle_count = scenario.count;
  log.dt = scenario.dt;
  log.perimeter = scenario.perimeter;
  log.vehicle_length = scenario.vehicle.length;
  log.base_headway = scenario.gains.h;
  log.standstill = scenario.gains.S_0;
  log.free_flow_speed = scenario.free_flow_speed;
  log.veh.resize(static_cast<size_t>(scenario.count));

  const int64_t steps = std::llround(scenario.t_end / scenario.dt);
  log.time.reserve(static_cast<size_t>(steps) + 1);

  supervise(w);  // apply t=0 coordination commands before the first sample
  detail::append_row(w, log);
  for (int64_t k = 0; k < steps; ++k) {
    step(w);
    detail::append_row(w, log);
  }

  log.switches = std::move(w.switch_events);
  log.coordination = std::move(w.coordination_events);
  log.notes = std::move(w.notes);
  return log;
}

struct PlatoonInfo {
  std::vector<int> members;        // 0-based, tail first, front vehicle last
  std::optional<int> front;        // the platoon's front vehicle (leader), if any
  double inter_platoon_gap = 0.0;  // gap ahead of the front vehicle
};

struct SteadyStateReport {
  bool converged = false;
  double settle_time = std::numeric_limits<double>::quiet_NaN();
  double mean_speed = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> equilibrium_speed;  // per vehicle, trailing-window mean
  std::vector<double> equilibrium_gap;
  std::vector<PlatoonInfo> platoons;
};

// Convergence check over the trailing window: per-vehicle speeds must stay
// within speed_tol of the fleet mean and each gap within gap_tol of its own
// trailing mean. The settle time is the earliest time after which both hold.
inline SteadyStateReport detect_steady_state(const TrajectoryLog& log,
                                             double speed_tol = 0.05,
                                             double gap_tol = 0.1,
                                             double window = 20.0,
                                             double attach_tol = 1.0) {
  SteadyStateReport rep;
  const size_t m = log.samples();
  const int n = log.vehicle_count;
  if (m < 2 || n < 1) return rep;
  const double t_end = log.time.back();
  const double t_win = t_end - window;
  if (t_win < log.time.front()) return rep;

  size_t win_begin = 0;
  while (win_begin < m && log.time[win_begin] < t_win) ++win_begin;

  rep.equilibrium_speed.assign(static_cast<size_t>(n), 0.0);
  rep.equilibrium_gap.assign(static_cast<size_t>(n), 0.0);
  const double win_count = static_cast<double>(m - win_begin);
  for (int i = 0; i < n; ++i) {
    const auto& se = log.veh[static_cast<size_t>(i)];
    double sv = 0.0, sy = 0.0;
    for (size_t k = win_begin; k < m; ++k) {
      sv += se.v[k];
      sy += se.y[k];
    }
    rep.equilibrium_speed[static_cast<size_t>(i)] = sv / win_count;
    rep.equilibrium_gap[static_cast<size_t>(i)] = sy / win_count;
  }
  rep.mean_speed =
      std::accumulate(rep.equilibrium_speed.begin(), rep.equilibrium_speed.end(), 0.0) /
      static_cast<double>(n);

  auto ok_at = [&](size_t k) {
    for (int i = 0; i < n; ++i) {
      const auto& se = log.veh[static_cast<size_t>(i)];
      if (std::abs(se.v[k] - rep.mean_speed) >= speed_tol) return false;
      if (std::abs(se.y[k] - rep.equilibrium_gap[static_cast<size_t>(i)]) >= gap_tol)
        return false;
    }
    return true;
  };

  size_t last_bad = m;  // sentinel: none
  for (size_t k = m; k-- > 0;) {
    if (!ok_at(k)) {
      last_bad = k;
      break;
    }
  }
  if (last_bad == m) {
    rep.converged = true;
    rep.settle_time = log.time.front();
  } else if (log.time[last_bad] < t_win) {
    rep.converged = true;
    rep.settle_time = log.time[last_bad + 1];
  } else {
    rep.converged = false;
    return rep;
  }

  // Partition into platoons at the final sample: a vehicle is attached to the
  // one ahead when it is in following mode at the base-headway spacing.
  const size_t last = m - 1;
  std::vector<bool> attached(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& se = log.veh[static_cast<size_t>(i)];
    const double base_delta = spacing_error(se.y[last], se.v[last],
                                            log.base_headway, log.standstill);
    attached[static_cast<size_t>(i)] =
        se.mode[last] == Mode::Following && std::abs(base_delta) <= attach_tol;
  }
  const bool all_attached =
      std::all_of(attached.begin(), attached.end(), [](bool b) { return b; });
  if (all_attached) {
    PlatoonInfo p;
    for (int i = 0; i < n; ++i) p.members.push_back(i);
    p.front = std::nullopt;
    p.inter_platoon_gap = 0.0;
    rep.platoons.push_back(std::move(p));
    return rep;
  }
  // Walk the ring starting just after some non-attached vehicle.
  int start = 0;
  while (attached[static_cast<size_t>(start)]) ++start;
  start = lead_index(start, n);
  PlatoonInfo current;
  int idx = start;
  for (int c = 0; c < n; ++c, idx = lead_index(idx, n)) {
    current.members.push_back(idx);
    if (!attached[static_cast<size_t>(idx)]) {
      current.front = idx;
      current.inter_platoon_gap = log.veh[static_cast<size_t>(idx)].y[last];
      rep.platoons.push_back(std::move(current));
      current = PlatoonInfo{};
    }
  }
  return rep;
}

struct SafetyViolation {
  double t = 0.0;
  int vehicle = 0;
  double gap = 0.0;
};

struct SwitchWarning {
  double t = 0.0;
  int vehicle = 0;
  double delta = 0.0;
};

struct SafetyReport {
  std::vector<SafetyViolation> violations;  // gap at or below the threshold
  std::vector<SwitchWarning> warnings;      // negative spacing error at a switch
};

inline SafetyReport safety_monitor(const TrajectoryLog& log,
                                   double s_collision = 0.0) {
  SafetyReport rep;
  for (size_t k = 0; k < log.samples(); ++k)
    for (int i = 0; i < log.vehicle_count; ++i) {
      const double y = log.veh[static_cast<size_t>(i)].y[k];
      if (y <= s_collision) rep.violations.push_back({log.time[k], i, y});
    }
  for (const SwitchEvent& e : log.switches)
    if (e.to == Mode::Following && e.delta_at_switch < 0.0)
      rep.warnings.push_back({e.t, e.vehicle, e.delta_at_switch});
  return rep;
}

}  // namespace ringsim
