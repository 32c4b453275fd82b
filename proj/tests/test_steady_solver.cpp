#include <gtest/gtest.h>

#include <cmath>

#include "kinlab/analysis.hpp"
#include "kinlab/steady.hpp"

using namespace kinlab;

namespace {

struct Fixture {
  CollisionTables tables = assemble_K(VelocityGrid::make(4.0, 8), -1.0, 1.0);
  SlabGrid slab = SlabGrid::make(0.5, 8);
  SlabOperator op = SlabOperator::make(tables, slab);
  GainRule rule = make_gain_rule(tables.grid, -1.0, 1.0, 64);
  SteadyConfig cfg = [] {
    SteadyConfig c;
    c.weight = WeightSpec::make(5.0, 0.1, 2.0);
    c.epsilon = {1e-1, 1e-2};
    c.n_restitution = 8;
    return c;
  }();
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

WallTemperature wall(double delta) {
  WallTemperature w;
  w.profile = WallProfile::AxisLinear;
  w.delta = delta;
  w.extent = 0.5;
  return w;
}

}  // namespace

TEST(SteadySolver, InflowSolveMatchesExactExponentialForConstantSource) {
  const Fixture& F = fixture();
  const int nv = F.op.n_v(), nx = F.op.n_x();
  const double eps = 0.1;
  const Matrix g = Matrix::Ones(nv, nx);
  const Matrix f = solve_inflow(F.op, eps, g, Inflow::zero(nv));
  // along each characteristic from the inflow wall: (1 - e^{-(eps+nu) s/|v1|}) / (eps+nu)
  for (int i = 0; i < nv; i += 37) {
    const double v1 = F.tables.grid.coords(i, 0);
    const double a = eps + F.op.nu[i];
    for (int j = 0; j < nx; ++j) {
      const double s = v1 > 0 ? F.slab.x[j] + 0.5 : 0.5 - F.slab.x[j];
      EXPECT_NEAR(f(i, j), (1.0 - std::exp(-a * s / std::abs(v1))) / a, 1e-12);
    }
  }
}

TEST(SteadySolver, GmresSolvesSmallSystem) {
  Matrix A(3, 3);
  A << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  const Vector b(Vector::Ones(3));
  Vector x = Vector::Zero(3);
  const GmresReport r = gmres([&](const Vector& y, Vector& z) { z = A * y; }, b, x, 1e-12, 3, 50);
  EXPECT_TRUE(r.converged);
  EXPECT_LE((A * x - b).norm(), 1e-10);
}

TEST(SteadySolver, IsothermalWallGivesZero) {
  const Fixture& F = fixture();
  const SteadyResult r = solve_nonlinear_steady(F.tables, F.op, F.rule, wall(0.0), F.cfg);
  EXPECT_LE(r.sup_w, F.cfg.outer_tol);
}

TEST(SteadySolver, SmallVariationScalesLinearlyAndConservesMass) {
  const Fixture& F = fixture();
  const SteadyResult a = solve_nonlinear_steady(F.tables, F.op, F.rule, wall(1e-3), F.cfg);
  const SteadyResult b = solve_nonlinear_steady(F.tables, F.op, F.rule, wall(1e-2), F.cfg);
  ASSERT_TRUE(a.converged);
  ASSERT_TRUE(b.converged);
  EXPECT_GT(a.sup_w, 0.0);
  const double ratio = b.sup_w / a.sup_w;
  EXPECT_GE(ratio, 7.0);
  EXPECT_LE(ratio, 13.0);
  EXPECT_LE(std::abs(a.mass), 1e-10);
  EXPECT_LE(a.contraction, 0.5);
  EXPECT_GE(a.min_F, 0.0);
  EXPECT_TRUE(b.sandwich.ok);
  for (const auto& lin : a.linear)
    for (const auto& s : lin.stages) EXPECT_TRUE(s.solve.converged);
}

TEST(SteadySolver, IncompatibleSourceRejected) {
  const Fixture& F = fixture();
  const Matrix g = F.op.walls.smu * Eigen::RowVectorXd::Ones(F.op.n_x());
  const Inflow r = Inflow::zero(F.op.n_v());
  EXPECT_THROW(solve_linear_steady(F.op, F.cfg, g, r), Error);
}

TEST(SteadySolver, ConfigValidation) {
  SteadyConfig c;
  c.weight = WeightSpec::make(5.0, 0.1, 2.0);
  EXPECT_NO_THROW(c.validate());
  c.lambda_schedule = {0.0, 0.5};
  EXPECT_THROW(c.validate(), ParameterError);
}
