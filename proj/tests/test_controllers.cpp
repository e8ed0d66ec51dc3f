#include "ringsim/controllers.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using namespace ringsim;

const ControllerGains kGains;  // reference set

TEST(Saturate, ClampsBothSides) {
  EXPECT_DOUBLE_EQ(saturate(5.0, -1.962, 0.981), 0.981);
  EXPECT_DOUBLE_EQ(saturate(0.0, -1.962, 0.981), 0.0);
  EXPECT_DOUBLE_EQ(saturate(-5.0, -1.962, 0.981), -1.962);
}

TEST(CruiseReferenceDerivative, SaturatesLargeErrors) {
  EXPECT_DOUBLE_EQ(cruise_reference_derivative(0.0, 29.0, kGains), 0.981);
  EXPECT_DOUBLE_EQ(cruise_reference_derivative(29.0, 29.0, kGains), 0.0);
  EXPECT_NEAR(cruise_reference_derivative(28.95, 29.0, kGains), 0.5, 1e-12);
}

TEST(CruiseControl, EquilibriumIsQuiet) {
  VehicleState s;
  s.v = 29.0;
  s.v_r = 29.0;
  const auto ci = cruise_control(s, 29.0, kGains);
  EXPECT_DOUBLE_EQ(ci.u, 0.0);
  EXPECT_DOUBLE_EQ(ci.dw, 0.0);
  EXPECT_DOUBLE_EQ(ci.dv_r, 0.0);
}

TEST(CruiseControl, TracksSpeedError) {
  VehicleState s;
  s.v = 28.0;
  s.v_r = 29.0;
  s.a = 0.5;
  const auto ci = cruise_control(s, 29.0, kGains);
  EXPECT_NEAR(ci.u, 1.5, 1e-12);  // -9*0.5 + 6*1
  EXPECT_NEAR(ci.dw, 0.03, 1e-12);
}

TEST(CruiseControl, PureAccelerationDamping) {
  VehicleState s;
  s.v = 29.0;
  s.v_r = 29.0;
  s.a = 0.2;
  EXPECT_NEAR(cruise_control(s, 29.0, kGains).u, -1.8, 1e-12);
}

TEST(FollowingReferenceSpeed, BoundaryAndLimit) {
  EXPECT_DOUBLE_EQ(following_reference_speed(21.0, 29.0, 0.5, 0.0), 29.0);
  EXPECT_DOUBLE_EQ(following_reference_speed(21.0, 29.0, 0.5, 1e9), 21.0);
  EXPECT_NEAR(following_reference_speed(21.0, 29.0, 0.5, 2.0),
              23.94303552937154, 1e-12);
}

TEST(GainRamp, BoundaryMidpointLimit) {
  EXPECT_DOUBLE_EQ(gain_ramp(2.0, 0.0, 0.5, 0.0), 0.0);
  EXPECT_NEAR(gain_ramp(2.0, 0.0, 0.5, 2.0), 1.2642411176571153, 1e-12);
  EXPECT_DOUBLE_EQ(gain_ramp(2.0, 0.0, 0.5, 1e9), 2.0);
}

TEST(SpacingError, ReferenceSpacing) {
  EXPECT_DOUBLE_EQ(spacing_error(47.5, 29.0, 1.5, 4.0), 0.0);
  EXPECT_DOUBLE_EQ(spacing_error(35.5, 21.0, 1.5, 4.0), 0.0);
  EXPECT_DOUBLE_EQ(spacing_error(100.0, 0.0, 1.5, 4.0), 96.0);
}

TEST(FollowingControl, EquilibriumIsQuiet) {
  VehicleState s;
  s.v = 21.0;
  const auto ci = following_control(s, 0.0, 0.0, 21.0,
                                    {kGains.C_p, kGains.C_q, 0.0, 0.0}, kGains);
  EXPECT_DOUBLE_EQ(ci.u, 0.0);
  EXPECT_DOUBLE_EQ(ci.dw, 0.0);
}

TEST(FollowingControl, SettledGainsExample) {
  VehicleState s;
  s.v = 20.0;
  const auto ci = following_control(s, 0.0, 2.0, 21.0,
                                    {kGains.C_p, kGains.C_q, 0.0, 0.0}, kGains);
  EXPECT_NEAR(ci.u, 10.0, 1e-12);   // 2*2 + 6*1
  EXPECT_NEAR(ci.dw, 0.05, 1e-12);  // 0.01*2 + 0.03*1
}

TEST(FollowingControl, AccelerationSharingIsAdditive) {
  VehicleState s;
  s.v = 20.0;
  const auto ci = following_control(s, 0.4, 2.0, 21.0,
                                    {kGains.C_p, kGains.C_q, 0.5, 0.0}, kGains);
  EXPECT_NEAR(ci.u, 10.2, 1e-12);
}

TEST(HeadwayNow, RampBetweenHeadways) {
  const HeadwayRamp ramp{1.5, 3.431, 0.5, 10.0};
  EXPECT_DOUBLE_EQ(headway_now(ramp, 10.0), 1.5);
  EXPECT_NEAR(headway_now(ramp, 12.0), 2.720624799097945, 1e-12);
  EXPECT_NEAR(headway_now(ramp, 10.0 + 1e9), 3.431, 1e-12);
}

TEST(HeadwayNow, MonotoneBetweenEndpoints) {
  const HeadwayRamp up{1.5, 3.431, 0.5, 0.0};
  const HeadwayRamp down{3.431, 1.5, 0.5, 0.0};
  double prev_up = headway_now(up, 0.0);
  double prev_down = headway_now(down, 0.0);
  for (double t = 0.1; t < 40.0; t += 0.1) {
    const double hu = headway_now(up, t);
    const double hd = headway_now(down, t);
    EXPECT_GE(hu, prev_up);
    EXPECT_LE(hd, prev_down);
    EXPECT_GE(hu, 1.5);
    EXPECT_LE(hu, 3.431);
    prev_up = hu;
    prev_down = hd;
  }
}

TEST(ExpRamp, EvaluatesWithSharedClock) {
  const ExpRamp ramp{0.0, 2.0};
  EXPECT_DOUBLE_EQ(ramp.at(0.5, 0.0), 0.0);
  EXPECT_NEAR(ramp.at(0.5, 2.0), 1.2642411176571153, 1e-12);
}

}  // namespace
