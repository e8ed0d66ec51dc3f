#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ringsim/polynomial.hpp"
#include "ringsim/simulation.hpp"
#include "ringsim/types.hpp"

namespace ringsim {

// Critical number of vehicles below which free flow is reachable. May be
// non-integer.
inline double critical_count(double P, double h, double V_f, double S_0,
                             double L) {
  const double denom = h * V_f + S_0 + L;
  if (!(denom > 0.0) || !(P > 0.0))
    throw AnalysisError("critical_count requires positive perimeter and spacing");
  return P / denom;
}

inline double equilibrium_speed(int n, double P, double h, double V_f,
                                double S_0, double L) {
  if (!(P > static_cast<double>(n) * L))
    throw AnalysisError("equilibrium_speed requires P > n*L");
  return std::min(V_f, (P / static_cast<double>(n) - S_0 - L) / h);
}

enum class Regime { FreeFlow, Congested };

inline const char* to_string(Regime r) {
  return r == Regime::FreeFlow ? "FreeFlow" : "Congested";
}

struct FundamentalDiagramPoint {
  double rho = 0.0;     // veh/m
  double v_star = 0.0;  // m/s
  double q_star = 0.0;  // veh/s
  Regime regime = Regime::FreeFlow;
};

struct FundamentalDiagram {
  double rho_c = 0.0;     // veh/m, break density
  double capacity = 0.0;  // veh/s, flow at the break
  std::vector<FundamentalDiagramPoint> points;
};

// Triangular equilibrium flow-density relation.
inline FundamentalDiagram fundamental_diagram(double h, double V_f, double S_0,
                                              double L,
                                              std::span<const double> rho_grid) {
  FundamentalDiagram fd;
  fd.rho_c = 1.0 / (h * V_f + S_0 + L);
  fd.capacity = V_f / (h * V_f + S_0 + L);
  fd.points.reserve(rho_grid.size());
  for (double rho : rho_grid) {
    if (!(rho > 0.0 && rho < 1.0 / L))
      throw AnalysisError("density grid must lie in (0, 1/L)");
    FundamentalDiagramPoint pt;
    pt.rho = rho;
    if (rho < fd.rho_c) {
      pt.regime = Regime::FreeFlow;
      pt.v_star = V_f;
      pt.q_star = V_f * rho;
    } else {
      pt.regime = Regime::Congested;
      pt.q_star = (1.0 - rho * (S_0 + L)) / h;
      pt.v_star = pt.q_star / rho;
    }
    fd.points.push_back(pt);
  }
  return fd;
}

struct SweepResult {
  double max_magnitude = 0.0;
  double argmax_omega = 0.0;
};

namespace detail {

inline double tf_magnitude(std::span<const double> num,
                           std::span<const double> den, double omega) {
  const std::complex<double> s(0.0, omega);
  return std::abs(polyval(num, s) / polyval(den, s));
}

}  // namespace detail

// Peak of |N(jw)/D(jw)| over a logarithmic grid with golden-section
// refinement around the coarse maximum. The denominator must be Hurwitz.
inline SweepResult magnitude_sweep(std::span<const double> num,
                                   std::span<const double> den,
                                   double omega_min = 1e-4,
                                   double omega_max = 1e4, int points = 2048) {
  if (points < 2) throw AnalysisError("magnitude_sweep needs at least 2 grid points");
  const auto roots = polynomial_roots(den);
  if (!is_hurwitz(roots))
    throw AnalysisError("magnitude_sweep requires a Hurwitz denominator");

  const double l0 = std::log(omega_min), l1 = std::log(omega_max);
  double best = -1.0;
  int best_idx = 0;
  for (int k = 0; k < points; ++k) {
    const double w = std::exp(l0 + (l1 - l0) * k / (points - 1));
    const double mag = detail::tf_magnitude(num, den, w);
    if (mag > best) {
      best = mag;
      best_idx = k;
    }
  }
  double lo = l0 + (l1 - l0) * std::max(best_idx - 1, 0) / (points - 1);
  double hi = l0 + (l1 - l0) * std::min(best_idx + 1, points - 1) / (points - 1);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = detail::tf_magnitude(num, den, std::exp(c));
  double fd = detail::tf_magnitude(num, den, std::exp(d));
  for (int it = 0; it < 80; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = detail::tf_magnitude(num, den, std::exp(c));
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = detail::tf_magnitude(num, den, std::exp(d));
    }
  }
  SweepResult res{best, std::exp(l0 + (l1 - l0) * best_idx / (points - 1))};
  if (fc > res.max_magnitude) res = {fc, std::exp(c)};
  if (fd > res.max_magnitude) res = {fd, std::exp(d)};
  return res;
}

struct ImpulseResult {
  bool nonnegative = false;
  double first_negative_time = std::numeric_limits<double>::quiet_NaN();
  double min_value = 0.0;
};

// Impulse response of N(s)/D(s) simulated in controllable canonical form with
// fixed-step RK4; nonnegative up to a small tolerance counts as nonnegative.
inline ImpulseResult impulse_nonneg(std::span<const double> num,
                                    std::span<const double> den,
                                    double horizon = 400.0, double dt = 1e-3,
                                    double eps = 1e-6) {
  const auto roots = polynomial_roots(den);
  if (!is_hurwitz(roots))
    throw AnalysisError("impulse_nonneg requires a Hurwitz denominator");
  size_t first = 0;
  while (first < den.size() && std::abs(den[first]) < 1e-300) ++first;
  const size_t m = den.size() - first - 1;
  if (num.size() > m)
    throw AnalysisError("impulse_nonneg requires a strictly proper transfer function");
  const double lead = den[first];

  std::vector<double> a(m);  // ascending, monic
  for (size_t i = 0; i < m; ++i) a[i] = den[den.size() - 1 - i] / lead;
  std::vector<double> b(m, 0.0);  // ascending, scaled by the normalization
  for (size_t i = 0; i < num.size(); ++i) b[i] = num[num.size() - 1 - i] / lead;

  std::vector<double> x(m, 0.0), k1(m), k2(m), k3(m), k4(m), tmp(m);
  x[m - 1] = 1.0;
  auto deriv = [&](const std::vector<double>& in, std::vector<double>& out) {
    for (size_t i = 0; i + 1 < m; ++i) out[i] = in[i + 1];
    double acc = 0.0;
    for (size_t i = 0; i < m; ++i) acc -= a[i] * in[i];
    out[m - 1] = acc;
  };
  auto output = [&](const std::vector<double>& in) {
    double acc = 0.0;
    for (size_t i = 0; i < m; ++i) acc += b[i] * in[i];
    return acc;
  };

  ImpulseResult res;
  res.nonnegative = true;
  res.min_value = output(x);
  const auto steps = static_cast<long long>(std::llround(horizon / dt));
  for (long long kstep = 0; kstep <= steps; ++kstep) {
    const double g = output(x);
    if (g < res.min_value) res.min_value = g;
    if (g < -eps && res.nonnegative) {
      res.nonnegative = false;
      res.first_negative_time = static_cast<double>(kstep) * dt;
    }
    deriv(x, k1);
    for (size_t i = 0; i < m; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    deriv(tmp, k2);
    for (size_t i = 0; i < m; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    deriv(tmp, k3);
    for (size_t i = 0; i < m; ++i) tmp[i] = x[i] + dt * k3[i];
    deriv(tmp, k4);
    for (size_t i = 0; i < m; ++i)
      x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return res;
}

struct StabilityReport {
  std::string label;
  std::vector<double> numerator;    // descending
  std::vector<double> denominator;  // descending
  std::vector<std::complex<double>> roots;
  bool hurwitz = false;
  double c1 = std::numeric_limits<double>::quiet_NaN();
  double c2_minus_cv2 = std::numeric_limits<double>::quiet_NaN();
  double cruise_condition = std::numeric_limits<double>::quiet_NaN();   // K_a*C_v + C_s
  double rescale_condition = std::numeric_limits<double>::quiet_NaN();  // K_a*C_p + C_q
  double max_gain = std::numeric_limits<double>::quiet_NaN();
  double argmax_omega = std::numeric_limits<double>::quiet_NaN();
  bool impulse_nonnegative = false;
  double impulse_min = std::numeric_limits<double>::quiet_NaN();
  double first_negative_time = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
};

inline constexpr double kGainPassThreshold = 1.0 + 1e-9;

namespace detail {

inline void attach_frequency_checks(StabilityReport& rep) {
  if (!rep.hurwitz) return;
  const SweepResult sw = magnitude_sweep(rep.numerator, rep.denominator);
  rep.max_gain = sw.max_magnitude;
  rep.argmax_omega = sw.argmax_omega;
  const ImpulseResult imp = impulse_nonneg(rep.numerator, rep.denominator);
  rep.impulse_nonnegative = imp.nonnegative;
  rep.impulse_min = imp.min_value;
  rep.first_negative_time = imp.first_negative_time;
}

}  // namespace detail

// Speed-tracking loop K(s) of the cruise controller. Pass means Hurwitz; the
// frequency and impulse figures are reported for the comfort assessment.
inline StabilityReport cruise_stability(const ControllerGains& g) {
  StabilityReport rep;
  rep.label = "K(s)";
  rep.numerator = {g.C_v, g.C_s};
  rep.denominator = {1.0, -g.K_a, g.C_v, g.C_s};
  rep.roots = polynomial_roots(rep.denominator);
  rep.hurwitz = is_hurwitz(rep.roots);
  rep.cruise_condition = g.K_a * g.C_v + g.C_s;
  detail::attach_frequency_checks(rep);
  rep.pass = rep.hurwitz;
  return rep;
}

inline double string_condition_c1(const ControllerGains& g, double h_eff) {
  return g.K_a * g.K_a - 2.0 * (h_eff * g.C_p + g.C_v);
}

inline double string_condition_c2(const ControllerGains& g, double h_eff) {
  const double B = h_eff * g.C_p + g.C_v;
  return B * B + 2.0 * g.C_q + 2.0 * g.K_a * (g.C_p + h_eff * g.C_q + g.C_s);
}

// Vehicle-following loop G(s): Hurwitz poles, the closed-form string
// attenuation conditions, and the frequency-sweep bound must all hold.
inline StabilityReport following_stability(const ControllerGains& g,
                                           double h_eff) {
  StabilityReport rep;
  rep.label = "G(s)";
  rep.numerator = {g.C_v, g.C_p + g.C_s, g.C_q};
  rep.denominator = {1.0, -g.K_a, h_eff * g.C_p + g.C_v,
                     g.C_p + h_eff * g.C_q + g.C_s, g.C_q};
  rep.roots = polynomial_roots(rep.denominator);
  rep.hurwitz = is_hurwitz(rep.roots);
  rep.c1 = string_condition_c1(g, h_eff);
  rep.c2_minus_cv2 = string_condition_c2(g, h_eff) - g.C_v * g.C_v;
  detail::attach_frequency_checks(rep);
  rep.pass = rep.hurwitz && rep.c1 >= 0.0 && rep.c2_minus_cv2 >= 0.0 &&
             rep.max_gain <= kGainPassThreshold;
  return rep;
}

// Rescaled position gains for a retargeted headway; keeps h*C_p and h*C_q
// invariant. Valid only when K_a*C_p + C_q < 0.
inline std::pair<double, double> coordinated_gain_rescale(
    const ControllerGains& g, double h_target) {
  if (!(h_target > 0.0))
    throw ConfigError("gain rescaling requires a positive headway target");
  if (!(g.K_a * g.C_p + g.C_q < 0.0))
    throw ConfigError("gain rescaling requires K_a*C_p + C_q < 0 (got " +
                      std::to_string(g.K_a * g.C_p + g.C_q) + ")");
  return {g.h * g.C_p / h_target, g.h * g.C_q / h_target};
}

// Loop of a platoon leader regulating the inter-platoon spacing at headway
// h_m with rescaled gains. The cascade with the base following loop passes
// when both factors are stable unity-bounded.
inline StabilityReport coordination_stability(const ControllerGains& g,
                                              double h_m) {
  const auto [cp, cq] = coordinated_gain_rescale(g, h_m);
  StabilityReport rep;
  rep.label = "H_m(s)";
  rep.numerator = {cp, cq};
  rep.denominator = {1.0, -g.K_a, h_m * cp + g.C_v, cp + h_m * cq + g.C_s, cq};
  rep.roots = polynomial_roots(rep.denominator);
  rep.hurwitz = is_hurwitz(rep.roots);
  ControllerGains scaled = g;
  scaled.C_p = cp;
  scaled.C_q = cq;
  rep.c1 = string_condition_c1(scaled, h_m);
  rep.c2_minus_cv2 = string_condition_c2(scaled, h_m) - g.C_v * g.C_v;
  rep.rescale_condition = g.K_a * g.C_p + g.C_q;
  detail::attach_frequency_checks(rep);
  const StabilityReport base = following_stability(g, g.h);
  rep.pass = rep.hurwitz && rep.max_gain <= kGainPassThreshold && base.pass;
  return rep;
}

struct StringAttenuationReport {
  struct VehicleNorms {
    int vehicle = 0;  // 0-based
    double delta_linf = 0.0;
    double delta_l2 = 0.0;
    double max_abs_accel = 0.0;
  };
  std::vector<VehicleNorms> vehicles;  // in the given downstream-first order
  bool attenuating = false;
  double tol = 0.0;
};

// Discrete spacing-error and acceleration norms along a platoon. The platoon
// indices run downstream to upstream (deepest follower first, front vehicle
// last); attenuation holds when no norm grows moving away from the front.
inline StringAttenuationReport string_attenuation_metrics(
    const TrajectoryLog& log, std::span<const int> platoon, double tol = 1e-3) {
  StringAttenuationReport rep;
  rep.tol = tol;
  const size_t msamples = log.samples();
  for (int idx : platoon) {
    const auto& se = log.veh.at(static_cast<size_t>(idx));
    StringAttenuationReport::VehicleNorms norms;
    norms.vehicle = idx;
    double l2 = 0.0;
    for (size_t k = 0; k < msamples; ++k) {
      norms.delta_linf = std::max(norms.delta_linf, std::abs(se.delta[k]));
      norms.max_abs_accel = std::max(norms.max_abs_accel, std::abs(se.a[k]));
      if (k + 1 < msamples) {
        const double dt = log.time[k + 1] - log.time[k];
        l2 += 0.5 * dt * (se.delta[k] * se.delta[k] + se.delta[k + 1] * se.delta[k + 1]);
      }
    }
    norms.delta_l2 = std::sqrt(l2);
    rep.vehicles.push_back(norms);
  }
  rep.attenuating = true;
  for (size_t k = 0; k + 1 < rep.vehicles.size(); ++k) {
    const auto& down = rep.vehicles[k];
    const auto& up = rep.vehicles[k + 1];
    if (down.delta_linf > up.delta_linf + tol || down.delta_l2 > up.delta_l2 + tol ||
        down.max_abs_accel > up.max_abs_accel + tol) {
      rep.attenuating = false;
      break;
    }
  }
  return rep;
}

}  // namespace ringsim
