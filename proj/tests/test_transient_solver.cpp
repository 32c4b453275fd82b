#include <gtest/gtest.h>

#include <cmath>

#include "kinlab/analysis.hpp"
#include "kinlab/rng.hpp"
#include "kinlab/transient.hpp"

using namespace kinlab;

namespace {

struct Fixture {
  CollisionTables tables = assemble_K(VelocityGrid::make(4.0, 8), -1.0, 1.0);
  GainRule rule = make_gain_rule(tables.grid, -1.0, 1.0, 64);
  SlabGrid slab = SlabGrid::make(0.5, 8);
  TransientSystem sys{tables, rule, slab, 1.0, 1.02};
  WeightSpec weight = WeightSpec::make(5.0, 0.1, 2.0);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

Matrix random_perturbation(const Fixture& F, std::uint64_t seed, double amp) {
  CounterRng rng(seed, 0, "init");
  const Vector mu = maxwellian_field(F.tables.grid, 1.0);
  Matrix f(F.tables.grid.size(), F.slab.nodes());
  for (int j = 0; j < f.cols(); ++j)
    for (int i = 0; i < f.rows(); ++i) f(i, j) = amp * rng.normal() * std::sqrt(mu[i]);
  return f;
}

}  // namespace

TEST(TransientSolver, CollisionStepConservesInvariantsAndDissipates) {
  const Fixture& F = fixture();
  const Matrix f = random_perturbation(F, 1, 1.0);
  const Matrix g = F.sys.collide(f, 0.05);
  const MacroProjection P = MacroProjection::make(F.tables.grid);
  for (int j = 0; j < f.cols(); ++j) {
    EXPECT_LE((P.coefficients(g.col(j)) - P.coefficients(f.col(j))).norm(), 1e-10);
    EXPECT_LE(g.col(j).norm(), f.col(j).norm() * (1.0 + 1e-12));
  }
}

TEST(TransientSolver, TransportConservesMassWithDiffuseWalls) {
  const Fixture& F = fixture();
  const Matrix f = random_perturbation(F, 2, 1.0);
  Matrix g = f;
  for (int n = 0; n < 20; ++n) g = F.sys.transport(g, 0.02, false, false);
  const double m0 = mass(f, F.slab, F.tables.grid), m1 = mass(g, F.slab, F.tables.grid);
  EXPECT_NEAR(m1, m0, 1e-13 * std::max(1.0, f.norm()));
}

TEST(TransientSolver, TransportRejectsLongSteps) {
  const Fixture& F = fixture();
  const Matrix f = random_perturbation(F, 3, 1.0);
  EXPECT_THROW(F.sys.transport(f, 1.0, false, false), Error);
}

TEST(TransientSolver, LinearRunConservesMassAndDecays) {
  const Fixture& F = fixture();
  TransientConfig cfg;
  cfg.weight = F.weight;
  cfg.dt = 0.02;
  cfg.T = 1.0;
  const Matrix f0 = random_perturbation(F, 4, 1e-3);
  const TransientState s = evolve_linear(F.sys, f0, Matrix(), cfg);
  double drift = 0.0;
  for (const auto& r : s.history) drift = std::max(drift, std::abs(r.mass - s.history[0].mass));
  EXPECT_LE(drift, 1e-6 * s.history[0].l2 * cfg.T);
  EXPECT_LT(s.history.back().l2, s.history.front().l2);
}

TEST(TransientSolver, LocalExistenceStepKeepsPositivity) {
  const Fixture& F = fixture();
  const Vector mu = maxwellian_field(F.tables.grid, 1.0);
  for (int r = 0; r < 3; ++r) {
    CounterRng rng(8, r, "pos");
    TransientState s;
    s.absolute = true;
    s.f.resize(mu.size(), F.slab.nodes());
    for (int j = 0; j < s.f.cols(); ++j)
      for (int i = 0; i < s.f.rows(); ++i) s.f(i, j) = 3.0 * rng.uniform() * mu[i] * (rng.uniform() < 0.7);
    for (int n = 0; n < 20; ++n) {
      s = local_existence_step(F.sys, s, 0.01);
      ASSERT_GE(s.f.minCoeff(), 0.0) << r << " " << n;
    }
  }
}

TEST(TransientSolver, StepGuardWarnsBeyondHorizon) {
  const Fixture& F = fixture();
  TransientState s;
  s.absolute = true;
  s.f = maxwellian_field(F.tables.grid, 1.0) * Eigen::RowVectorXd::Ones(F.slab.nodes());
  EXPECT_TRUE(local_existence_step(F.sys, s, 0.01, 0.1).warnings.empty());
  EXPECT_FALSE(local_existence_step(F.sys, s, 0.01, 0.005).warnings.empty());
}

TEST(TransientSolver, HorizonShrinksWithAmplitude) {
  const Fixture& F = fixture();
  const Matrix G = maxwellian_field(F.tables.grid, 1.0) * Eigen::RowVectorXd::Ones(F.slab.nodes());
  const double a = measured_horizon(F.sys, 2.0 * G, F.weight);
  const double b = measured_horizon(F.sys, 4.0 * G, F.weight);
  EXPECT_GT(a, b);
  const HorizonFit fit = fit_horizon({2.0, 4.0}, {a, b});
  EXPECT_GT(fit.C_hat, 0.0);
}

TEST(TransientSolver, ConfigValidation) {
  TransientConfig c;
  EXPECT_NO_THROW(c.validate());
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
}
