#include <gtest/gtest.h>

#include <cmath>

#include "kinlab/collision.hpp"
#include "kinlab/rng.hpp"

using namespace kinlab;

namespace {

const CollisionTables& small_tables() {
  static const CollisionTables T = assemble_K(VelocityGrid::make(4.0, 10), -1.0, 1.0);
  return T;
}

}  // namespace

TEST(CollisionOperators, KernelIsSymmetric) {
  const CollisionTables& T = small_tables();
  const double scale = T.K.cwiseAbs().maxCoeff();
  EXPECT_LE((T.K - T.K.transpose()).cwiseAbs().maxCoeff() / scale, 1e-12);
}

TEST(CollisionOperators, FrequencyPositive) {
  EXPECT_GT(small_tables().nu.minCoeff(), 0.0);
}

TEST(CollisionOperators, MassModeDefectShrinksUnderRefinement) {
  // the defect of L on sqrt(mu) is pure quadrature error
  auto defect = [](const CollisionTables& T) {
    return T.apply_L(T.sqrt_mu).norm() / T.nu.cwiseProduct(T.sqrt_mu).norm();
  };
  const double fine = defect(small_tables());
  const double coarse = defect(assemble_K(VelocityGrid::make(4.0, 8), -1.0, 1.0));
  EXPECT_LT(fine, coarse);
  EXPECT_LT(fine, 2e-2);
}

TEST(CollisionOperators, ConservativeOperatorIsPsdWithFiveDimensionalKernel) {
  const CollisionTables& T = small_tables();
  const MacroProjection P = MacroProjection::make(T.grid);
  const Matrix Lt = conservative_L(T, P);
  EXPECT_LE((Lt - Lt.transpose()).cwiseAbs().maxCoeff(), 1e-10 * Lt.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Matrix> es(Lt, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  const double top = ev[ev.size() - 1];
  for (int i = 0; i < 5; ++i) EXPECT_LE(std::abs(ev[i]), 1e-9 * top);
  EXPECT_GT(ev[5], 1e-3 * top);
}

TEST(CollisionOperators, ProjectionIsIdempotent) {
  const VelocityGrid g = VelocityGrid::make(4.0, 10);
  const MacroProjection P = MacroProjection::make(g);
  CounterRng rng(5, 0, "proj");
  Vector f(g.size());
  for (int i = 0; i < f.size(); ++i) f[i] = rng.normal();
  const Vector p = P.project(f);
  EXPECT_LE((P.project(p) - p).norm(), 1e-10 * p.norm());
  EXPECT_LE((P.gram() - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(CollisionOperators, MatrixAgreesWithMonteCarloAwayFromTheEdge) {
  const CollisionTables& T = small_tables();
  const VelocityGrid& g = T.grid;
  // smooth field, evaluated both on the grid and pointwise
  auto field = [](const Vec3& v) { return std::exp(-0.3 * v.squaredNorm()) * (1.0 + 0.2 * v[0]); };
  Vector f(g.size());
  for (int i = 0; i < g.size(); ++i) f[i] = field(g.node(i));
  const Vector Kf = T.K * f;
  CounterRng rng(11, 0, "mc");
  int checked = 0;
  for (int i = 0; i < g.size() && checked < 3; i += 1) {
    const Vec3 v = g.node(i);
    if (v.norm() > 1.5 || (checked > 0 && v[2] < 0.0)) continue;
    const McEstimate mc = mc_apply_K(v, field, T.kappa, T.b0, 400000, rng);
    const double matrix_value = Kf[i];
    EXPECT_NEAR(matrix_value, mc.mean, 5.0 * mc.std_error + 0.05 * std::abs(mc.mean)) << v.transpose();
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(CollisionOperators, GammaOfMaxwellianPerturbationIsSmall) {
  const CollisionTables& T = small_tables();
  const GainRule rule = make_gain_rule(T.grid, T.kappa, T.b0, 64);
  const Vector zero = Vector::Zero(T.grid.size());
  const GammaParts parts = gamma(T, rule, zero, zero);
  EXPECT_EQ(parts.total().cwiseAbs().maxCoeff(), 0.0);
}

TEST(CollisionOperators, CutoffPartShrinksWithM) {
  const VelocityGrid g = VelocityGrid::make(4.0, 10);
  const Vector one = Vector::Ones(g.size());
  const double a = (assemble_cutoff(g, -1.0, 1.0, 0.1) * one).cwiseAbs().maxCoeff();
  const double b = (assemble_cutoff(g, -1.0, 1.0, 0.2) * one).cwiseAbs().maxCoeff();
  EXPECT_GT(b, a);
  EXPECT_NEAR(std::log(b / a) / std::log(2.0), 2.0, 0.3);
}

TEST(CollisionOperators, SandwichFlagsLargeDeviations) {
  const Vector nu = Vector::Constant(4, 1.0);
  EXPECT_TRUE(nu_star_sandwich(nu, Vector::Constant(4, 1.2)).ok);
  EXPECT_FALSE(nu_star_sandwich(nu, Vector::Constant(4, 1.6)).ok);
}

TEST(CollisionOperators, MatrixCacheRoundTrip) {
  const VelocityGrid g = VelocityGrid::make(4.0, 4);
  Matrix M = Matrix::Random(3, 2);
  const std::string path = ::testing::TempDir() + "/kinlab_cache_test.bin";
  const CacheHeader hdr = cache_header(g, -1.0, 1.0, 0.0, M);
  save_matrix(path, hdr, M);
  Matrix back;
  ASSERT_TRUE(load_matrix(path, hdr, back));
  EXPECT_EQ((back - M).cwiseAbs().maxCoeff(), 0.0);
  CacheHeader other = cache_header(g, -0.5, 1.0, 0.0, M);
  EXPECT_FALSE(load_matrix(path, other, back));
}
