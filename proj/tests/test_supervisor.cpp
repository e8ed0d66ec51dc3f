#include "ringsim/supervisor.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using namespace ringsim;

const ControllerGains kGains;

TEST(SwitchingThreshold, RelativeSpeedTerm) {
  EXPECT_DOUBLE_EQ(switching_threshold(20.0, 15.0, kGains), 39.0);
  EXPECT_DOUBLE_EQ(switching_threshold(10.0, 15.0, kGains), 19.0);
  EXPECT_DOUBLE_EQ(switching_threshold(29.0, 29.0, kGains), 47.5);
}

ModeState cruising(double limit = 29.0) {
  ModeState ms;
  ms.mode = Mode::Cruise;
  ms.speed_limit = limit;
  return ms;
}

ModeState following(double limit = 29.0) {
  ModeState ms;
  ms.mode = Mode::Following;
  ms.speed_limit = limit;
  return ms;
}

TEST(SelectMode, EntersFollowingBelowThreshold) {
  // threshold for (20, 15) is 39 m
  const auto d = select_mode(cruising(), 38.0, 20.0, 15.0, 29.0, true, 5.0, kGains);
  ASSERT_TRUE(d.has_value());
  EXPECT_EQ(d->new_mode, Mode::Following);
  EXPECT_EQ(d->reason, SwitchReason::ThresholdCrossed);
  EXPECT_DOUBLE_EQ(d->time, 5.0);
}

TEST(SelectMode, StaysCruisingAboveThreshold) {
  EXPECT_FALSE(select_mode(cruising(), 200.0, 20.0, 15.0, 29.0, true, 5.0, kGains));
}

TEST(SelectMode, NoEntryWhenLeadOutOfRange) {
  EXPECT_FALSE(select_mode(cruising(), 38.0, 20.0, 15.0, 29.0, false, 5.0, kGains));
}

TEST(SelectMode, NoEntryWhenLeadFasterThanLimit) {
  // slowed desired leader must not latch onto a full-speed lead
  EXPECT_FALSE(select_mode(cruising(23.2), 30.0, 20.0, 29.0, 29.0, true, 5.0, kGains));
}

TEST(SelectMode, SlowedFollowerDecouplesFromFasterLead) {
  const auto d = select_mode(following(0.8 * 29.0), 47.5, 29.0, 29.0, 29.0, true,
                             10.0, kGains);
  ASSERT_TRUE(d.has_value());
  EXPECT_EQ(d->new_mode, Mode::Cruise);
  EXPECT_EQ(d->reason, SwitchReason::LeadExceedsLimit);
}

TEST(SelectMode, TransientLeadOvershootDoesNotDecouple) {
  // The lead briefly exceeds the ego's limit while entitled to no more than
  // it; the follower holds on.
  EXPECT_FALSE(select_mode(following(29.0), 47.5, 29.0, 30.5, 29.0, true, 25.0,
                           kGains));
}

TEST(SelectMode, OutOfRangeExitIsDebounced) {
  ModeState ms = following();
  update_range_tracking(ms, 150.0, 120.0, 10.0);
  EXPECT_TRUE(std::isfinite(ms.out_of_range_since));
  EXPECT_FALSE(select_mode(ms, 150.0, 29.0, 29.0, 29.0, false, 10.2, kGains));
  const auto d = select_mode(ms, 150.0, 29.0, 29.0, 29.0, false, 10.6, kGains);
  ASSERT_TRUE(d.has_value());
  EXPECT_EQ(d->reason, SwitchReason::LeadOutOfRange);

  // returning within range clears the clock
  update_range_tracking(ms, 100.0, 120.0, 10.7);
  EXPECT_FALSE(select_mode(ms, 100.0, 29.0, 29.0, 29.0, true, 11.5, kGains));
}

TEST(SelectMode, RangeExitSuppressedDuringSpacingAdjustment) {
  ModeState ms = following();
  ms.coord_adjusting = true;
  update_range_tracking(ms, 150.0, 120.0, 10.0);
  EXPECT_FALSE(select_mode(ms, 150.0, 29.0, 29.0, 29.0, false, 12.0, kGains));
}

TEST(CoordinationSpeedLimit, SlowdownUntilFormed) {
  CoordinationPlan plan;
  plan.alpha = 0.8;
  EXPECT_DOUBLE_EQ(coordination_speed_limit(plan, false, 29.0), 23.2);
  EXPECT_DOUBLE_EQ(coordination_speed_limit(plan, true, 29.0), 29.0);
}

CoordinationPlan two_platoon_plan() {
  CoordinationPlan plan;
  plan.kind = CoordKind::MPlatoonSymmetrical;
  plan.leaders = {1, 3};  // vehicles 2 and 4, 0-based
  plan.alpha = 0.8;
  plan.issue_time = 10.0;
  return plan;
}

TEST(DesignatedFollowers, PartitionByRingOrder) {
  const auto plan = two_platoon_plan();
  EXPECT_EQ(designated_followers(plan, 3, 4), (std::vector<int>{2}));
  EXPECT_EQ(designated_followers(plan, 1, 4), (std::vector<int>{0}));

  CoordinationPlan one;
  one.kind = CoordKind::OnePlatoonAsymmetrical;
  one.leaders = {2};
  EXPECT_EQ(designated_followers(one, 2, 4), (std::vector<int>{1, 0, 3}));
}

TEST(PlatoonFormedBehind, ChecksDesignatedFollowers) {
  const auto plan = two_platoon_plan();
  std::vector<ModeState> modes(4);
  modes[0].mode = Mode::Following;  // follower of leader 2
  modes[2].mode = Mode::Following;  // follower of leader 4
  EXPECT_TRUE(platoon_formed_behind(modes, plan, 3));
  modes[2].mode = Mode::Cruise;
  EXPECT_FALSE(platoon_formed_behind(modes, plan, 3));
  EXPECT_TRUE(platoon_formed_behind(modes, plan, 1));
}

TEST(DesiredHeadway, SymmetricalSharesTheRing) {
  CoordinationPlan plan;
  plan.kind = CoordKind::Symmetrical;
  EXPECT_NEAR(desired_headway(plan, 320.0, 4, 4.5, 4.0, 29.0, 1.5,
                              CoordRole::Follower),
              2.4655172413793105, 1e-12);
}

TEST(DesiredHeadway, TwoPlatoonLeaderGap) {
  const auto plan = two_platoon_plan();
  const double d = inter_platoon_distance(320.0, 4, 2, 4.5, 1.5, 29.0, 4.0);
  EXPECT_NEAR(d, 103.5, 1e-12);
  EXPECT_NEAR(desired_headway(plan, 320.0, 4, 4.5, 4.0, 29.0, 1.5,
                              CoordRole::DesiredLeader),
              3.4310344827586206, 1e-12);
  EXPECT_DOUBLE_EQ(desired_headway(plan, 320.0, 4, 4.5, 4.0, 29.0, 1.5,
                                   CoordRole::Follower),
                   1.5);
}

TEST(DesiredHeadway, InterPlatoonDistanceShrinksWithMorePlatoons) {
  // 320 m ring fits n_c ~ 6.15 vehicles at speed; use n = 6, m in {2, 3}.
  const double d2 = inter_platoon_distance(320.0, 6, 2, 4.5, 1.5, 29.0, 4.0);
  const double d3 = inter_platoon_distance(320.0, 6, 3, 4.5, 1.5, 29.0, 4.0);
  EXPECT_GT(d2, d3);
}

TEST(DesiredHeadway, RejectsHighDensityPlans) {
  CoordinationPlan plan;
  plan.kind = CoordKind::Symmetrical;
  EXPECT_THROW(desired_headway(plan, 320.0, 8, 4.5, 4.0, 29.0, 1.5,
                               CoordRole::Follower),
               ConfigError);
}

}  // namespace
