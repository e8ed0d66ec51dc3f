#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ringsim {

inline constexpr double kGravity = 9.81;  // m/s^2

// Ramp start time used for vehicles whose ramps were already settled before
// the simulation began (pre-formed platoons).
inline constexpr double kSettledTime = -1e9;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { Cruise, Following };

inline const char* to_string(Mode m) {
  return m == Mode::Cruise ? "Cruise" : "Following";
}

enum class Fidelity { Linearized, FullNonlinear };

enum class CoordKind { OnePlatoonAsymmetrical, Symmetrical, MPlatoonSymmetrical };

enum class CoordRole { None, DesiredLeader, Follower };

// Longitudinal vehicle parameters. The friction law is linear in speed,
// d_m(v) = friction_coeff * v, and the engine time constant is speed
// independent; both enter only the full-nonlinear model.
struct VehicleParams {
  double mass = 1500.0;           // kg
  double drag_coeff = 0.44;       // kg/m
  double friction_coeff = 50.0;   // kg/s
  double engine_time_const = 0.2; // s
  double length = 4.5;            // m

  double friction(double v) const { return friction_coeff * v; }
  double friction_slope(double /*v*/) const { return friction_coeff; }
  double tau(double /*v*/) const { return engine_time_const; }

  void validate() const {
    if (!(mass > 0.0)) throw ConfigError("vehicle mass must be positive");
    if (!(drag_coeff >= 0.0)) throw ConfigError("drag_coeff must be non-negative");
    if (!(friction_coeff >= 0.0)) throw ConfigError("friction_coeff must be non-negative");
    if (!(engine_time_const > 0.0)) throw ConfigError("engine_time_const must be positive");
    if (!(length > 0.0)) throw ConfigError("vehicle length must be positive");
  }
};

// All controller design constants. Defaults are the reference parameter set
// used by the bundled scenarios.
struct ControllerGains {
  double K_a = -9.0;   // 1/s
  double C_p = 2.0;    // 1/s^2
  double C_v = 6.0;    // 1/s^2
  double C_q = 0.01;   // 1/s^3
  double C_s = 0.03;   // 1/s^3
  double C_a = 0.0;    // -, acceleration feedback (V2V)
  double C_b = 0.0;    // 1/s, acceleration feedback (V2V)
  double p = 10.0;     // 1/s, reference filter gain
  double lambda = 0.5; // 1/s, ramp rate
  double r = 1.0;      // s, relative-speed term of the switching threshold
  double h = 1.5;      // s, time headway
  double S_0 = 4.0;    // m, standstill distance
  double a_min = -0.2 * kGravity; // m/s^2
  double a_max = 0.1 * kGravity;  // m/s^2

  void validate() const {
    if (!(K_a < 0.0)) throw ConfigError("K_a must be negative");
    if (!(C_p > 0.0 && C_v > 0.0 && C_q > 0.0 && C_s > 0.0))
      throw ConfigError("C_p, C_v, C_q, C_s must be positive");
    if (!(C_a >= 0.0 && C_b >= 0.0)) throw ConfigError("C_a, C_b must be non-negative");
    if (!(p > 0.0 && lambda > 0.0 && r > 0.0))
      throw ConfigError("p, lambda, r must be positive");
    if (!(h > 0.0)) throw ConfigError("time headway h must be positive");
    if (!(S_0 > 0.0)) throw ConfigError("standstill distance S_0 must be positive");
    if (!(a_min < 0.0 && 0.0 < a_max))
      throw ConfigError("acceleration bounds must satisfy a_min < 0 < a_max");
  }
};

struct CoordinationPlan {
  CoordKind kind = CoordKind::Symmetrical;
  std::vector<int> leaders;  // 0-based vehicle indices of desired leaders
  double alpha = 0.8;        // slowdown factor, in (0,1)
  double issue_time = 0.0;   // s
};

// Dynamic state of one vehicle. x is the cumulative distance traveled
// (never reduced modulo the perimeter); w is the controller integral state;
// v_r is the reference-speed filter state; F is the engine force and is used
// only at full-nonlinear fidelity.
struct VehicleState {
  double x = 0.0;   // m
  double v = 0.0;   // m/s
  double a = 0.0;   // m/s^2
  double w = 0.0;   // m/s^3 integrated
  double v_r = 0.0; // m/s
  double F = 0.0;   // N
};

struct RingScenario {
  std::string name = "scenario";
  double perimeter = 320.0;       // m
  int count = 8;                  // number of vehicles
  double free_flow_speed = 29.0;  // m/s
  ControllerGains gains;
  VehicleParams vehicle;
  std::vector<double> initial_gaps;    // size count-1, gap of vehicle i to i+1
  std::vector<double> initial_speeds;  // size 1 (uniform) or count
  std::vector<double> initial_accels;  // empty, size 1, or count
  double sensing_range = 120.0;   // m
  bool v2v_enabled = false;
  std::optional<CoordinationPlan> plan;
  double dt = 0.01;               // s
  double t_end = 300.0;           // s
  Fidelity fidelity = Fidelity::Linearized;

  double speed_of(int i) const {
    return initial_speeds.size() == 1 ? initial_speeds[0]
                                      : initial_speeds[static_cast<size_t>(i)];
  }
  double accel_of(int i) const {
    if (initial_accels.empty()) return 0.0;
    return initial_accels.size() == 1 ? initial_accels[0]
                                      : initial_accels[static_cast<size_t>(i)];
  }

  void validate() const;  // defined below
};

inline void RingScenario::validate() const {
  gains.validate();
  vehicle.validate();
  if (count < 1) throw ConfigError("vehicle count must be at least 1");
  const double n = static_cast<double>(count);
  if (!(perimeter > n * vehicle.length))
    throw ConfigError("vehicles do not fit on ring: perimeter must exceed count * length");
  if (!(free_flow_speed > 0.0)) throw ConfigError("free_flow_speed must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (!(sensing_range > 0.0)) throw ConfigError("sensing_range must be positive");

  if (initial_gaps.size() != static_cast<size_t>(count - 1))
    throw ConfigError("initial gaps must list count-1 values");
  double gap_sum = 0.0;
  for (double g : initial_gaps) {
    if (!(g > 0.0)) throw ConfigError("initial gaps must be positive");
    gap_sum += g;
  }
  const double wrap_gap = perimeter - n * vehicle.length - gap_sum;
  if (!(wrap_gap > 0.0))
    throw ConfigError("initial gaps leave no room for the wrap-around gap");

  if (initial_speeds.size() != 1 && initial_speeds.size() != static_cast<size_t>(count))
    throw ConfigError("initial speeds must list 1 or count values");
  for (double v : initial_speeds)
    if (!(v >= 0.0)) throw ConfigError("initial speeds must be non-negative");
  if (!initial_accels.empty() && initial_accels.size() != 1 &&
      initial_accels.size() != static_cast<size_t>(count))
    throw ConfigError("initial accels must list 0, 1 or count values");

  if (plan) {
    const CoordinationPlan& cp = *plan;
    if (!(cp.alpha > 0.0 && cp.alpha < 1.0))
      throw ConfigError("coordination alpha must lie strictly in (0,1)");
    if (!(cp.issue_time >= 0.0)) throw ConfigError("coordination issue_time must be non-negative");
    const double n_c =
        perimeter / (gains.h * free_flow_speed + gains.S_0 + vehicle.length);
    if (!(n < n_c))
      throw ConfigError("coordination requires the vehicle count to be below the critical count");
    const int m = static_cast<int>(cp.leaders.size());
    switch (cp.kind) {
      case CoordKind::OnePlatoonAsymmetrical:
        if (m != 1) throw ConfigError("one-platoon plan needs exactly one desired leader");
        break;
      case CoordKind::Symmetrical:
        if (m != 0) throw ConfigError("symmetrical plan takes no desired leaders");
        break;
      case CoordKind::MPlatoonSymmetrical:
        if (!(m > 1 && 2 * m <= count))
          throw ConfigError("m-platoon plan needs 1 < m <= count/2 desired leaders");
        break;
    }
    for (int idx : cp.leaders) {
      if (idx < 0 || idx >= count) throw ConfigError("desired leader index out of range");
      if (std::count(cp.leaders.begin(), cp.leaders.end(), idx) != 1)
        throw ConfigError("desired leader indices must be distinct");
    }
    if (cp.kind != CoordKind::OnePlatoonAsymmetrical) {
      // Spacing adjustment rescales C_p, C_q; the rescaling is only valid when
      // K_a*C_p + C_q is negative.
      if (!(gains.K_a * gains.C_p + gains.C_q < 0.0))
        throw ConfigError("coordination gain rescaling requires K_a*C_p + C_q < 0");
    }
  }
}

}  // namespace ringsim
