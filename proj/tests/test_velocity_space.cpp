#include <gtest/gtest.h>

#include "kinlab/rng.hpp"
#include "kinlab/velocity.hpp"

using namespace kinlab;

TEST(VelocitySpace, MaxwellianValues) {
  EXPECT_NEAR(maxwellian(Vec3::Zero(), 1.0), 1.0 / (2.0 * kPi), 1e-15);
  EXPECT_NEAR(maxwellian(Vec3::Zero(), 2.0), 1.0 / (8.0 * kPi), 1e-15);
  EXPECT_THROW(maxwellian(Vec3::Zero(), 0.0), ParameterError);
}

TEST(VelocitySpace, GridMeasureAndNoZeroNode) {
  const VelocityGrid g = VelocityGrid::make(5.0, 16);
  EXPECT_NEAR(g.total_measure(), 1000.0, 1e-9);
  for (int i = 0; i < g.size(); ++i) EXPECT_GT(g.node(i).norm(), 0.0);
}

TEST(VelocitySpace, WeightAdmissibility) {
  EXPECT_NO_THROW(WeightSpec::make(5.0, 0.1, 2.0, 4.0));
  EXPECT_THROW(WeightSpec::make(5.0, 0.2, 2.0, 4.0), ParameterError);
  EXPECT_THROW(WeightSpec::make(5.0, 0.1, 2.5, 4.0), ParameterError);
  EXPECT_THROW(WeightSpec::make(3.5, 0.1, 1.0, 4.0), ParameterError);
  EXPECT_NO_THROW(WeightSpec::make(5.0, 3.0, 1.0, 4.0));
  const WeightSpec w = WeightSpec::make(5.0, 0.1, 2.0);
  EXPECT_NEAR(w(Vec3::Zero()), 1.0, 1e-15);
}

TEST(VelocitySpace, FluxNormalization) {
  const VelocityGrid g = VelocityGrid::make(5.0, 16);
  for (double th : {0.8, 1.0, 1.5}) {
    const double z = flux_normalization(g, th, Vec3(1.0, 0.0, 0.0));
    EXPECT_GE(z, 0.99) << th;
    EXPECT_LE(z, 1.01) << th;
  }
}

TEST(VelocitySpace, FluxSamplerOutgoingAndMean) {
  CounterRng rng(3, 0, "flux");
  const Vec3 n(0.0, 0.0, 1.0);
  double s = 0.0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const Vec3 v = sample_flux_velocity(rng, 1.0, n);
    ASSERT_GT(v.dot(n), 0.0);
    s += v.dot(n);
  }
  EXPECT_NEAR(s / N, std::sqrt(kPi / 2.0), 0.01);
}

TEST(VelocitySpace, CollisionFrequencyDecaysLikeSoftPotential) {
  const double kappa = -1.0;
  const double a = collision_frequency_at(Vec3(8.0, 0.0, 0.0), 0.5, kappa, 1.0);
  const double b = collision_frequency_at(Vec3(16.0, 0.0, 0.0), 0.5, kappa, 1.0);
  EXPECT_NEAR(a / b, 2.0, 0.1);
  const double z = collision_frequency_at(Vec3(0.1, 0.0, 0.0), 0.5, kappa, 1.0);
  EXPECT_GT(z, a);
}

TEST(VelocitySpace, WallTemperatureDelta) {
  WallTemperature w;
  w.profile = WallProfile::AxisLinear;
  w.delta = 0.01;
  w.extent = 0.5;
  std::vector<Vec3> pts = {Vec3(-0.5, 0, 0), Vec3(0.5, 0, 0)};
  EXPECT_NEAR(w.realized_delta(pts), 0.01, 1e-15);
  w.delta = 1.5;
  EXPECT_THROW(w.validate(), ParameterError);
}

TEST(Rng, CounterStreamsAreReproducibleAndDistinct) {
  CounterRng a(1, 0, "x"), b(1, 0, "x"), c(1, 1, "x"), d(1, 0, "y");
  for (int i = 0; i < 10; ++i) {
    const auto va = a();
    EXPECT_EQ(va, b());
    EXPECT_NE(va, c());
    EXPECT_NE(va, d());
  }
}
