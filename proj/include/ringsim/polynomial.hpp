#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "ringsim/types.hpp"

namespace ringsim {

// Horner evaluation of a real polynomial (descending coefficients) at a
// complex point.
inline std::complex<double> polyval(std::span<const double> coeffs,
                                    std::complex<double> s) {
  std::complex<double> acc = 0.0;
  for (double c : coeffs) acc = acc * s + c;
  return acc;
}

namespace detail {

// Parlett-Reinsch balancing: diagonal similarity scaling by powers of two so
// row and column norms match. Improves eigenvalue accuracy on companion
// matrices whose coefficients span many orders of magnitude.
inline void balance(Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  bool converged = false;
  while (!converged) {
    converged = true;
    for (int i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(m(j, i));
        r += std::abs(m(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double f = 1.0;
      const double s = c + r;
      while (c < r / 2.0) {
        c *= 2.0;
        r /= 2.0;
        f *= 2.0;
      }
      while (c >= r * 2.0) {
        c /= 2.0;
        r *= 2.0;
        f /= 2.0;
      }
      if ((c + r) < 0.95 * s) {
        converged = false;
        m.row(i) /= f;
        m.col(i) *= f;
      }
    }
  }
}

}  // namespace detail

// Roots of a real polynomial given by descending coefficients, via the
// balanced companion-matrix eigenvalue problem. Intended for the low-degree
// characteristic polynomials of this library (degree <= 8).
inline std::vector<std::complex<double>> polynomial_roots(
    std::span<const double> coeffs) {
  size_t first = 0;
  while (first < coeffs.size() && std::abs(coeffs[first]) < 1e-300) ++first;
  if (coeffs.size() - first < 2) return {};
  const int degree = static_cast<int>(coeffs.size() - first - 1);
  if (degree > 8) throw AnalysisError("polynomial_roots supports degree <= 8");

  const double lead = coeffs[first];
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 0; i + 1 < degree; ++i) m(i + 1, i) = 1.0;
  for (int i = 0; i < degree; ++i) {
    // ascending coefficient a_i is coeffs[size-1-i]
    const double a_i = coeffs[coeffs.size() - 1 - static_cast<size_t>(i)] / lead;
    m(i, degree - 1) = -a_i;
  }
  detail::balance(m);

  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw AnalysisError("eigenvalue iteration failed in polynomial_roots");
  std::vector<std::complex<double>> roots(static_cast<size_t>(degree));
  for (int i = 0; i < degree; ++i) roots[static_cast<size_t>(i)] = solver.eigenvalues()[i];
  std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return roots;
}

inline double max_real_part(std::span<const std::complex<double>> roots) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& r : roots) mx = std::max(mx, r.real());
  return mx;
}

// Strict open-left-half-plane test with a small margin for round-off.
inline bool is_hurwitz(std::span<const std::complex<double>> roots,
                       double threshold = -1e-9) {
  if (roots.empty()) return false;
  return max_real_part(roots) < threshold;
}

}  // namespace ringsim
