#include "ringsim/ring.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

using namespace ringsim;

TEST(Gap, DirectSubtraction) {
  EXPECT_DOUBLE_EQ(gap(0.0, 52.0, 4.5, 320.0, false), 47.5);
}

TEST(Gap, WrapAddsPerimeter) {
  EXPECT_DOUBLE_EQ(gap(310.0, 10.0, 4.5, 320.0, true), 15.5);
}

TEST(Gap, BumperToBumperIsZero) {
  EXPECT_DOUBLE_EQ(gap(0.0, 4.5, 4.5, 320.0, false), 0.0);
}

TEST(Gap, NegativeResultIsLegal) {
  EXPECT_LT(gap(0.0, 3.0, 4.5, 320.0, false), 0.0);
}

std::vector<VehicleState> states_from_positions(const std::vector<double>& xs) {
  std::vector<VehicleState> out(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) out[i].x = xs[i];
  return out;
}

TEST(TotalGapSum, IdentityRegardlessOfPositions) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> jitter(0.5, 30.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs{0.0};
    for (int i = 1; i < 8; ++i) xs.push_back(xs.back() + 4.5 + jitter(rng));
    ASSERT_LT(xs.back(), 320.0 - 4.5);
    const auto states = states_from_positions(xs);
    EXPECT_NEAR(total_gap_sum(states, 4.5, 320.0), 320.0 - 8 * 4.5, 1e-9);
  }
}

TEST(TotalGapSum, SmallCounts) {
  const auto s4 = states_from_positions({0.0, 10.0, 30.0, 90.0});
  EXPECT_NEAR(total_gap_sum(s4, 4.5, 320.0), 302.0, 1e-12);
  const auto s1 = states_from_positions({12.0});
  EXPECT_NEAR(total_gap_sum(s1, 4.5, 320.0), 315.5, 1e-12);
}

TEST(Ring, GapsPartitionThePerimeter) {
  // Rebuilding positions from the gaps recovers the originals, and the wrap
  // gap accounts for exactly the remaining arc.
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> jitter(0.5, 40.0);
  const double P = 500.0, L = 4.5;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    std::vector<double> gaps;
    for (int i = 0; i + 1 < n; ++i) gaps.push_back(jitter(rng));
    const auto xs = positions_from_gaps(3.25, gaps, L);
    ASSERT_EQ(static_cast<int>(xs.size()), n);
    const auto states = states_from_positions(xs);
    double sum = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      EXPECT_NEAR(gap_of(states, i, L, P), gaps[static_cast<size_t>(i)], 1e-12);
      sum += gaps[static_cast<size_t>(i)];
    }
    EXPECT_NEAR(gap_of(states, n - 1, L, P), P - n * L - sum, 1e-9);
  }
}

TEST(Ring, LeadIndexWraps) {
  EXPECT_EQ(lead_index(0, 4), 1);
  EXPECT_EQ(lead_index(3, 4), 0);
  EXPECT_TRUE(wraps(3, 4));
  EXPECT_FALSE(wraps(1, 4));
}

}  // namespace
