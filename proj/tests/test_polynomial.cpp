#include "ringsim/polynomial.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

namespace {

using namespace ringsim;
using cplx = std::complex<double>;

// Expand a polynomial from its roots (monic, descending real coefficients).
std::vector<double> poly_from_roots(const std::vector<cplx>& roots) {
  std::vector<cplx> c{1.0};
  for (const cplx& r : roots) {
    std::vector<cplx> next(c.size() + 1, 0.0);
    for (size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= c[i] * r;
    }
    c = next;
  }
  std::vector<double> out(c.size());
  for (size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

double match_error(std::vector<cplx> got, std::vector<cplx> want) {
  // Greedy nearest-neighbour pairing; adequate for well-separated roots.
  double worst = 0.0;
  for (const cplx& w : want) {
    double best = 1e300;
    size_t best_i = 0;
    for (size_t i = 0; i < got.size(); ++i) {
      const double d = std::abs(got[i] - w);
      if (d < best) {
        best = d;
        best_i = i;
      }
    }
    worst = std::max(worst, best);
    got.erase(got.begin() + static_cast<std::ptrdiff_t>(best_i));
  }
  return worst;
}

TEST(PolynomialRoots, KnownMixedRoots) {
  const std::vector<cplx> want{{-1.0, 0.0}, {-2.0, 0.0}, {-3.0, 4.0}, {-3.0, -4.0}};
  const auto coeffs = poly_from_roots(want);
  EXPECT_LT(match_error(polynomial_roots(coeffs), want), 1e-10);
}

TEST(PolynomialRoots, RandomQuarticsRecoverSyntheticRoots) {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> re(-5.0, 5.0), im(0.3, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<cplx> want;
    if (trial % 2 == 0) {
      // two conjugate pairs, stable or unstable
      for (int k = 0; k < 2; ++k) {
        const cplx r(re(rng), im(rng));
        want.push_back(r);
        want.push_back(std::conj(r));
      }
    } else {
      for (int k = 0; k < 4; ++k) want.emplace_back(re(rng), 0.0);
    }
    // keep roots separated so the pairing is unambiguous
    bool ok = true;
    for (size_t i = 0; i < want.size() && ok; ++i)
      for (size_t j = i + 1; j < want.size(); ++j)
        if (std::abs(want[i] - want[j]) < 0.2) {
          ok = false;
          break;
        }
    if (!ok) continue;
    const auto coeffs = poly_from_roots(want);
    ASSERT_LT(match_error(polynomial_roots(coeffs), want), 1e-8);
  }
}

TEST(PolynomialRoots, SpeedTrackingCharacteristicPolynomial) {
  const std::vector<double> den{1.0, 9.0, 6.0, 0.03};
  const auto roots = polynomial_roots(den);
  const std::vector<cplx> want{{-8.275397357042698, 0.0},
                               {-0.7195645913235195, 0.0},
                               {-0.005038051633789336, 0.0}};
  EXPECT_LT(match_error(roots, want), 1e-9);
  EXPECT_TRUE(is_hurwitz(roots));
}

TEST(PolynomialRoots, LeadingZerosAreStripped) {
  const std::vector<double> padded{0.0, 0.0, 1.0, 3.0, 2.0};  // (s+1)(s+2)
  const auto roots = polynomial_roots(padded);
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_LT(match_error(roots, {{-2.0, 0.0}, {-1.0, 0.0}}), 1e-10);
}

TEST(PolynomialRoots, DegreeCapIsEnforced) {
  const std::vector<double> big(11, 1.0);
  EXPECT_THROW(polynomial_roots(big), AnalysisError);
}

TEST(Hurwitz, RootAtOriginFails) {
  // C_s = 0 leaves a root at the origin; marginal stability is rejected.
  const auto roots = polynomial_roots(std::vector<double>{1.0, 9.0, 6.0, 0.0});
  EXPECT_FALSE(is_hurwitz(roots));
}

TEST(Hurwitz, MissingDampingFails) {
  // K_a = 0 removes the s^2 term.
  const auto roots = polynomial_roots(std::vector<double>{1.0, 0.0, 6.0, 0.03});
  EXPECT_FALSE(is_hurwitz(roots));
}

TEST(Polyval, MatchesDirectEvaluation) {
  const std::vector<double> c{2.0, -3.0, 0.5, 1.0};
  const cplx s(0.3, -1.7);
  const cplx direct = 2.0 * s * s * s - 3.0 * s * s + 0.5 * s + 1.0;
  EXPECT_LT(std::abs(polyval(c, s) - direct), 1e-12);
}

}  // namespace
