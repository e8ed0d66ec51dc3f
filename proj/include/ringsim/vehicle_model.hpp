#pragma once

#include <cmath>

#include "ringsim/types.hpp"

namespace ringsim {

struct ModelDerivative {
  double dx = 0.0;  // m/s
  double dv = 0.0;  // m/s^2
  double da = 0.0;  // m/s^3
  double dF = 0.0;  // N/s
};

// Triple-integrator dynamics used by the linearized fidelity.
inline ModelDerivative linear_derivative(const VehicleState& s, double u) {
  return {s.v, s.a, u, 0.0};
}

inline double model_alpha(double v, const VehicleParams& p) {
  return 1.0 / (p.mass * p.tau(v));
}

inline double model_beta(double v, double a, const VehicleParams& p) {
  const double kd_m = p.drag_coeff / p.mass;
  return -2.0 * kd_m * v * a - p.friction_slope(v) * a / p.mass -
         (a + kd_m * v * v + p.friction(v) / p.mass) / p.tau(v);
}

// Engine force that balances drag and friction at the given speed and
// sustains the given acceleration.
inline double force_balance(double v, double a, const VehicleParams& p) {
  return p.mass * a + p.drag_coeff * v * v + p.friction(v);
}

// Throttle force chosen so the jerk of the nonlinear model equals u exactly.
inline double feedback_linearize(const VehicleState& s, double u,
                                 const VehicleParams& p) {
  if (!std::isfinite(s.v) || !std::isfinite(s.a) || !std::isfinite(u))
    throw IntegrationError("feedback_linearize: non-finite state or input");
  return (u - model_beta(s.v, s.a, p)) / model_alpha(s.v, p);
}

// Full nonlinear model with first-order engine dynamics. The acceleration is
// derived from the force balance on the engine-force state; da follows from
// differentiating that balance.
inline ModelDerivative nonlinear_derivative(const VehicleState& s, double throttle,
                                            const VehicleParams& p) {
  const double a = (s.F - p.drag_coeff * s.v * s.v - p.friction(s.v)) / p.mass;
  return {s.v, a, model_beta(s.v, a, p) + model_alpha(s.v, p) * throttle,
          (throttle - s.F) / p.tau(s.v)};
}

}  // namespace ringsim
