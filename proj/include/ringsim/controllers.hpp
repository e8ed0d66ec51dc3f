#pragma once

#include <algorithm>
#include <cmath>

#include "ringsim/types.hpp"

namespace ringsim {

struct ControlInput {
  double u = 0.0;     // m/s^3, jerk command
  double dw = 0.0;    // m/s^3, integral-state derivative
  double dv_r = 0.0;  // m/s^2, reference-filter derivative (cruise only)
};

inline double saturate(double x, double a_min, double a_max) {
  return std::clamp(x, a_min, a_max);
}

// exp(-lambda*dt) with the argument clamped so settled ramps (dt huge)
// evaluate to exactly zero instead of overflowing.
inline double ramp_decay(double lambda, double t_since) {
  return std::exp(-std::min(lambda * std::max(t_since, 0.0), 745.0));
}

// Acceleration-limited reference filter for the cruise controller.
inline double cruise_reference_derivative(double v_r, double speed_limit,
                                          const ControllerGains& g) {
  return saturate(g.p * (speed_limit - v_r), g.a_min, g.a_max);
}

inline ControlInput cruise_control(const VehicleState& s, double speed_limit,
                                   const ControllerGains& g) {
  const double e_v = s.v_r - s.v;
  return {g.K_a * s.a + g.C_v * e_v + s.w, g.C_s * e_v,
          cruise_reference_derivative(s.v_r, speed_limit, g)};
}

// Reference speed while following: decays from its value at the switch
// instant toward the lead vehicle's current speed.
inline double following_reference_speed(double v_l, double v_r_at_switch,
                                        double lambda, double t_since_switch) {
  return v_l + (v_r_at_switch - v_l) * ramp_decay(lambda, t_since_switch);
}

// Exponential gain ramp; start value at t_since = 0, target as t -> inf.
inline double gain_ramp(double target, double start, double lambda,
                        double t_since) {
  return target + (start - target) * ramp_decay(lambda, t_since);
}

struct ExpRamp {
  double start = 0.0;
  double target = 0.0;

  double at(double lambda, double t_since) const {
    return gain_ramp(target, start, lambda, t_since);
  }
};

// Time-varying headway target, used when a coordination command retargets the
// reference spacing.
struct HeadwayRamp {
  double h_start = 0.0;
  double h_target = 0.0;
  double lambda = 0.0;
  double t_start = 0.0;
};

inline double headway_now(const HeadwayRamp& ramp, double t) {
  return ramp.h_target +
         (ramp.h_start - ramp.h_target) * ramp_decay(ramp.lambda, t - ramp.t_start);
}

// Error against the reference spacing h_now*v + S_0.
inline double spacing_error(double y, double v, double h_now, double S_0) {
  return y - (h_now * v + S_0);
}

// Ramped gains as seen by the vehicle-following law at one instant.
struct EffectiveGains {
  double c_p = 0.0;
  double c_q = 0.0;
  double c_a = 0.0;
  double c_b = 0.0;
};

inline ControlInput following_control(const VehicleState& s, double lead_a,
                                      double delta, double v_r,
                                      const EffectiveGains& eg,
                                      const ControllerGains& g) {
  const double e_v = v_r - s.v;
  const double e_a = lead_a - s.a;
  return {g.K_a * s.a + eg.c_p * delta + g.C_v * e_v + eg.c_a * e_a + s.w,
          eg.c_q * delta + g.C_s * e_v + eg.c_b * e_a, 0.0};
}

}  // namespace ringsim
