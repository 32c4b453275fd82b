#include <gtest/gtest.h>

#include "kinlab/cycles.hpp"

using namespace kinlab;

namespace {

WallTemperature warm_wall(double delta) {
  WallTemperature w;
  w.profile = WallProfile::Harmonic;
  w.delta = delta;
  return w;
}

}  // namespace

TEST(BoundaryCycles, SampledCyclesSatisfyTheirInvariants) {
  const DomainSpec ball = DomainSpec::ball(1.0);
  CycleOptions opt;
  opt.k_max = 30;
  opt.time_floor = 0.0;
  for (int i = 0; i < 200; ++i) {
    CounterRng rng(2, i, "cycle");
    const CycleSample c = sample_cycle(ball, warm_wall(0.1), 3.0, Vec3(0.2, -0.1, 0.3),
                                       Vec3(0.5, 1.0, -0.4), opt, rng);
    EXPECT_EQ(cycle_invariant_error(ball, c, opt), "") << i;
    EXPECT_LE(static_cast<int>(c.bounces.size()), opt.k_max);
  }
}

TEST(BoundaryCycles, SpeededCyclesSatisfyTheirInvariants) {
  const DomainSpec slab = DomainSpec::box(Vec3(0.5, 1.0, 1.0));
  CycleOptions opt;
  opt.k_max = 20;
  opt.speeded = true;
  opt.kappa = -1.5;
  for (int i = 0; i < 100; ++i) {
    CounterRng rng(4, i, "cycle");
    const CycleSample c =
        sample_cycle(slab, warm_wall(0.0), 2.0, Vec3::Zero(), Vec3(1.0, 0.3, 0.1), opt, rng);
    EXPECT_EQ(cycle_invariant_error(slab, c, opt), "") << i;
  }
}

TEST(BoundaryCycles, GrazingStartRejected) {
  const DomainSpec ball = DomainSpec::ball(1.0);
  CounterRng rng(1, 0, "cycle");
  EXPECT_THROW(sample_cycle(ball, warm_wall(0.0), 1.0, Vec3(1.0, 0.0, 0.0),
                            Vec3(0.0, 1.0, 0.0), CycleOptions{}, rng),
               DomainError);
}

TEST(BoundaryCycles, DiffuseReflectionPointsInward) {
  const DomainSpec ball = DomainSpec::ball(1.0);
  CounterRng rng(9, 0, "reflect");
  const Vec3 x(0.0, 0.6, 0.8);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(diffuse_reflect(ball, x, 1.2, rng).dot(x), 0.0);
}

TEST(BoundaryCycles, WeightAdmissibility) {
  EXPECT_NO_THROW(check_cycle_weight(0.25, 2.0));
  EXPECT_THROW(check_cycle_weight(0.5, 2.0), ParameterError);
  EXPECT_NO_THROW(check_cycle_weight(3.0, 1.0));
}

TEST(BoundaryCycles, MeasureShrinksWithBounceCount) {
  const DomainSpec ball = DomainSpec::ball(1.0);
  CycleMeasureConfig cfg;
  cfg.T0 = 1.0;
  cfg.n_samples = 4000;
  cfg.eta = 0.05;
  double prev = 2.0;
  for (int k : {1, 3, 6, 12, 24}) {
    cfg.k = k;
    const CycleMeasureResult r = cycle_measure_estimate(ball, warm_wall(0.0), cfg, 77);
    EXPECT_LE(r.estimate, prev + 2.0 * r.std_error) << k;
    prev = r.estimate;
  }
  EXPECT_LT(prev, 0.5);
}

TEST(BoundaryCycles, MeasureIsDeterministic) {
  const DomainSpec ball = DomainSpec::ball(1.0);
  CycleMeasureConfig cfg;
  cfg.k = 4;
  cfg.n_samples = 2000;
  const auto a = cycle_measure_estimate(ball, warm_wall(0.05), cfg, 5);
  const auto b = cycle_measure_estimate(ball, warm_wall(0.05), cfg, 5);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(BoundaryCycles, WelfordMergeMatchesSinglePass) {
  Welford all, a, b;
  for (int i = 0; i < 100; ++i) {
    const double x = std::sin(0.37 * i);
    all.add(x);
    (i < 40 ? a : b).add(x);
  }
  a.merge(b);
  EXPECT_NEAR(a.mean, all.mean, 1e-14);
  EXPECT_NEAR(a.variance(), all.variance(), 1e-13);
}
