#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ringsim/controllers.hpp"
#include "ringsim/types.hpp"

namespace ringsim {

enum class SwitchReason {
  ThresholdCrossed,
  LeadExceedsLimit,
  LeadOutOfRange,
  CoordinationSlowdown,
  CoordinationResume,
};

inline const char* to_string(SwitchReason r) {
  switch (r) {
    case SwitchReason::ThresholdCrossed: return "ThresholdCrossed";
    case SwitchReason::LeadExceedsLimit: return "LeadExceedsLimit";
    case SwitchReason::LeadOutOfRange: return "LeadOutOfRange";
    case SwitchReason::CoordinationSlowdown: return "CoordinationSlowdown";
    case SwitchReason::CoordinationResume: return "CoordinationResume";
  }
  return "?";
}

struct SwitchDecision {
  Mode new_mode = Mode::Cruise;
  SwitchReason reason = SwitchReason::ThresholdCrossed;
  double time = 0.0;
};

// Per-vehicle supervisor state. Gain ramps share one start time; the headway
// ramp carries its own. out_of_range_since is +inf while the lead is in range.
struct ModeState {
  Mode mode = Mode::Cruise;
  double entry_time = 0.0;       // mode entry, also v_r ramp start
  double v_r_at_switch = 0.0;
  double speed_limit = 0.0;      // active V_s
  ExpRamp cp{}, cq{}, ca{}, cb{};
  double gain_ramp_start = 0.0;
  HeadwayRamp headway{};
  CoordRole role = CoordRole::None;
  bool platoon_formed = false;   // latched once the platoon behind has formed
  bool coord_adjusting = false;  // a coordination spacing target is active
  double out_of_range_since = std::numeric_limits<double>::infinity();
  int switch_count = 0;

  EffectiveGains effective_gains(double lambda, double t) const {
    const double since = t - gain_ramp_start;
    return {cp.at(lambda, since), cq.at(lambda, since), ca.at(lambda, since),
            cb.at(lambda, since)};
  }
};

// Spacing below which a cruising vehicle adopts vehicle following. The
// relative-speed term is active only when closing in on the lead.
inline double switching_threshold(double v_e, double v_l,
                                  const ControllerGains& g) {
  double d = g.h * v_e + g.S_0;
  if (v_e >= v_l) d += g.r * (v_e - v_l);
  return d;
}

// Tracks how long the lead has been beyond sensing range (with a small
// hysteresis margin); feeds the debounced out-of-range exit.
inline void update_range_tracking(ModeState& ms, double y_e,
                                  double sensing_range, double t,
                                  double margin = 2.0) {
  if (y_e > sensing_range + margin) {
    if (!std::isfinite(ms.out_of_range_since)) ms.out_of_range_since = t;
  } else {
    ms.out_of_range_since = std::numeric_limits<double>::infinity();
  }
}

// Mode transition rules. A following vehicle gives up the lead only when the
// lead is entitled to travel faster than the ego's own limit; comparing
// against min(v_l, lead limit) keeps transient lead overshoot from bouncing
// the follower out of the platoon. Out-of-range exits are debounced and
// suppressed while a coordination spacing target is active (the coordinator
// supplies the lead data then).
inline std::optional<SwitchDecision> select_mode(
    const ModeState& ms, double y_e, double v_e, double v_l,
    double lead_speed_limit, bool lead_in_range, double t,
    const ControllerGains& g, double exit_dwell = 0.5) {
  if (ms.mode == Mode::Cruise) {
    if (lead_in_range && y_e < switching_threshold(v_e, v_l, g) &&
        v_l <= ms.speed_limit)
      return SwitchDecision{Mode::Following, SwitchReason::ThresholdCrossed, t};
    return std::nullopt;
  }
  if (std::min(v_l, lead_speed_limit) > ms.speed_limit)
    return SwitchDecision{Mode::Cruise, SwitchReason::LeadExceedsLimit, t};
  if (!ms.coord_adjusting && std::isfinite(ms.out_of_range_since) &&
      t - ms.out_of_range_since >= exit_dwell)
    return SwitchDecision{Mode::Cruise, SwitchReason::LeadOutOfRange, t};
  return std::nullopt;
}

// Speed limit of a desired leader under a coordination plan.
inline double coordination_speed_limit(const CoordinationPlan& plan,
                                       bool platoon_formed_behind, double V_f) {
  return platoon_formed_behind ? V_f : plan.alpha * V_f;
}

// Vehicles between this desired leader and the previous desired leader, in
// ring order going backwards from the leader.
inline std::vector<int> designated_followers(const CoordinationPlan& plan,
                                             int leader, int count) {
  auto is_leader = [&](int idx) {
    return std::find(plan.leaders.begin(), plan.leaders.end(), idx) !=
           plan.leaders.end();
  };
  std::vector<int> out;
  for (int j = (leader + count - 1) % count; j != leader && !is_leader(j);
       j = (j + count - 1) % count)
    out.push_back(j);
  return out;
}

inline bool platoon_formed_behind(std::span<const ModeState> modes,
                                  const CoordinationPlan& plan, int leader) {
  for (int j : designated_followers(plan, leader, static_cast<int>(modes.size())))
    if (modes[static_cast<size_t>(j)].mode != Mode::Following) return false;
  return true;
}

// Equilibrium distance between adjacent platoons in the m-platoon symmetrical
// configuration.
inline double inter_platoon_distance(double P, int n, int m, double L, double h,
                                     double V_f, double S_0) {
  const double nn = static_cast<double>(n);
  return (nn / static_cast<double>(m)) * (P / nn - L - h * V_f - S_0) +
         h * V_f + S_0;
}

// Headway target a vehicle adopts under the plan, by role. Followers keep the
// base headway; the symmetrical configuration retargets everyone.
inline double desired_headway(const CoordinationPlan& plan, double P, int n,
                              double L, double S_0, double V_f, double h_base,
                              CoordRole role) {
  const double n_c = P / (h_base * V_f + S_0 + L);
  if (!(static_cast<double>(n) < n_c))
    throw ConfigError("coordination requires the vehicle count to be below the critical count");
  switch (plan.kind) {
    case CoordKind::Symmetrical: {
      const double h_d = (P / static_cast<double>(n) - L - S_0) / V_f;
      if (!(h_d > 0.0)) throw ConfigError("symmetrical plan yields a non-positive headway");
      return h_d;
    }
    case CoordKind::MPlatoonSymmetrical: {
      if (role != CoordRole::DesiredLeader) return h_base;
      const double d = inter_platoon_distance(
          P, n, static_cast<int>(plan.leaders.size()), L, h_base, V_f, S_0);
      const double h_m = (d - S_0) / V_f;
      if (!(h_m > 0.0)) throw ConfigError("m-platoon plan yields a non-positive headway");
      return h_m;
    }
    case CoordKind::OnePlatoonAsymmetrical:
      return h_base;
  }
  throw ConfigError("unknown coordination kind");
}

}  // namespace ringsim
