#include <gtest/gtest.h>

#include "kinlab/domain.hpp"
#include "kinlab/rng.hpp"

using namespace kinlab;

TEST(DomainGeometry, BallExitFromCentre) {
  const DomainSpec ball = DomainSpec::ball(1.0);
  const ExitRecord r = exit_time(ball, Vec3::Zero(), Vec3(1.0, 0.0, 0.0));
  EXPECT_NEAR(r.t_b, 1.0, 1e-14);
  EXPECT_NEAR(r.x_b[0], -1.0, 1e-14);
  EXPECT_LT(r.normal_dot, 0.0);
}

TEST(DomainGeometry, SlabExitUsesTheCrossingAxis) {
  const DomainSpec slab = DomainSpec::slab(0.5);
  const ExitRecord r = exit_time(slab, Vec3(0.25, 0.0, 0.0), Vec3(2.0, 0.0, 0.0));
  EXPECT_NEAR(r.t_b, 0.375, 1e-14);
  EXPECT_NEAR(r.x_b[0], -0.5, 1e-14);
}

TEST(DomainGeometry, ExitPointLiesOnTheBoundary) {
  const DomainSpec ball = DomainSpec::ball(2.0);
  CounterRng rng(7, 0, "exit");
  for (int i = 0; i < 1000; ++i) {
    Vec3 x(rng.normal(), rng.normal(), rng.normal());
    x *= 1.9 * rng.uniform() / x.norm();
    const Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const ExitRecord r = exit_time(ball, x, v);
    EXPECT_NEAR(r.x_b.norm(), 2.0, 1e-12);
    EXPECT_LE(r.t_b, ball.diameter() / v.norm() + 1e-12);
    EXPECT_LE(r.normal_dot, 1e-12);
  }
}

TEST(DomainGeometry, DegenerateInputsThrow) {
  const DomainSpec ball = DomainSpec::ball(1.0);
  EXPECT_THROW(exit_time(ball, Vec3::Zero(), Vec3::Zero()), DomainError);
  EXPECT_THROW(exit_time(ball, Vec3(2.0, 0.0, 0.0), Vec3(1.0, 0.0, 0.0)), DomainError);
  EXPECT_THROW(DomainSpec::ball(-1.0).validate(), ParameterError);
}

TEST(DomainGeometry, SpeededExitScalesTime) {
  const DomainSpec ball = DomainSpec::ball(1.0);
  const Vec3 v(2.0, 0.0, 0.0);
  const double kappa = -1.0;
  const ExitRecord plain = exit_time(ball, Vec3::Zero(), v);
  const ExitRecord fast = speeded_exit_time(ball, Vec3::Zero(), v, kappa);
  EXPECT_NEAR(fast.t_b * speed_factor(v, kappa), plain.t_b, 1e-12);
  EXPECT_NEAR(speed_factor(v, kappa), std::pow(5.0, 0.5), 1e-12);
}

TEST(DomainGeometry, NormalIsUnitAndOutward) {
  const DomainSpec ball = DomainSpec::ball(1.0);
  const Vec3 x(0.6, 0.8, 0.0);
  EXPECT_NEAR(ball.normal(x).norm(), 1.0, 1e-14);
  EXPECT_GT(ball.normal(x).dot(x), 0.0);
  EXPECT_TRUE(is_near_grazing(ball, x, Vec3(-0.8, 0.6, 0.0), 1e-6));
  EXPECT_FALSE(is_near_grazing(ball, x, Vec3(1.0, 0.0, 0.0), 1e-6));
}
