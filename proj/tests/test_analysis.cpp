#include <gtest/gtest.h>

#include <cmath>

#include "kinlab/analysis.hpp"
#include "kinlab/rng.hpp"

using namespace kinlab;

// Independent oracle for the envelope: brute-force minimum over a fine speed grid.
static double brute_exponent(double t, double kappa, double c, double zeta, double nu0) {
  double best = nu0 * t;
  for (double s = 0.0; s <= 2000.0; s += 1e-3)
    best = std::min(best, nu0 * std::pow(1.0 + s, kappa) * t + c * std::pow(s, zeta));
  return best;
}

TEST(Analysis, EnvelopeMatchesBruteForceMinimum) {
  for (double t : {0.5, 10.0, 300.0}) {
    const double e = decay_exponent(t, -1.0, 1.0 / 16.0, 2.0);
    const double b = brute_exponent(t, -1.0, 1.0 / 16.0, 2.0, 4.0 * kPi);
    EXPECT_NEAR(e, b, 1e-6 * std::max(1.0, b)) << t;
  }
}

TEST(Analysis, EnvelopeIsMonotoneInTime) {
  double prev = 1.0;
  for (double t = 0.0; t < 200.0; t += 0.5) {
    const double e = decay_envelope(t, -0.5, 0.1, 1.0);
    EXPECT_LE(e, prev);
    prev = e;
  }
  EXPECT_DOUBLE_EQ(decay_envelope(0.0, -1.0, 0.1, 2.0), 1.0);
}

TEST(Analysis, FitRecoversPlantedExponent) {
  std::vector<double> t, v;
  for (int i = 1; i <= 400; ++i) {
    t.push_back(0.1 * i);
    v.push_back(3.0 * std::exp(-0.7 * std::pow(t.back(), 0.6)));
  }
  const DecayFit f = fit_stretched_exponential(t, v, 0.0, 100.0);
  EXPECT_NEAR(f.alpha_hat, 0.6, 1e-6);
  EXPECT_NEAR(f.lambda_hat, 0.7, 1e-6);
  EXPECT_NEAR(f.log_prefactor, std::log(3.0), 1e-6);
}

TEST(Analysis, FitRejectsNonDecreasingTail) {
  std::vector<double> t, v;
  for (int i = 1; i <= 50; ++i) {
    t.push_back(i);
    v.push_back(1.0 + 0.1 * (i % 2));
  }
  EXPECT_THROW(fit_stretched_exponential(t, v, 0.0, 100.0), NumericalError);
}

TEST(Analysis, EnvelopeOracleExponentOnComparatorCase) {
  std::vector<double> t, lv;
  for (int i = 0; i < 200; ++i) {
    t.push_back(1e2 * std::pow(1e2, i / 199.0));
    lv.push_back(-decay_exponent(t.back(), -1.0, 1.0 / 16.0, 2.0));
  }
  const DecayFit f = fit_stretched_exponential_log(t, lv, 1e2, 1e4);
  EXPECT_GE(f.alpha_hat, 0.653);
  EXPECT_LE(f.alpha_hat, 0.680);
}

TEST(Analysis, DecreasingEnvelopeIsSmallestMajorant) {
  const std::vector<double> v = {3, 1, 2, 0.5, 0.7, 0.1};
  const std::vector<double> e = decreasing_envelope(v);
  const std::vector<double> want = {3, 2, 2, 0.7, 0.7, 0.1};
  EXPECT_EQ(e, want);
}

TEST(Analysis, IterationLemmaHoldsOnRandomSequences) {
  CounterRng rng(12, 0, "lemma");
  int violations = 0;
  for (int s = 0; s < 1000; ++s) {
    const int k = 1 + static_cast<int>(rng.uniform() * 5);
    const double D = rng.uniform();
    const auto a = random_iteration_sequence(rng, 60, k, D);
    const IterationReport r = iteration_bound(a, k, D);
    ASSERT_EQ(r.hypothesis_violations, 0);
    violations += r.bound_violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(Analysis, ConstantSequenceSaturatesHypothesis) {
  const double D = 0.35;
  const std::vector<double> a(40, 8.0 / 7.0 * D);
  const IterationReport r = iteration_bound(a, 2, D);
  EXPECT_EQ(r.hypothesis_violations, 0);
  EXPECT_EQ(r.bound_violations, 0);
  EXPECT_NEAR(a.back(), r.A.back() / 8.0 + D, 1e-15);
}

TEST(Analysis, ContractionRatios) {
  const auto r = contraction_ratios({1.0, 0.5, 0.125});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_DOUBLE_EQ(r[0], 0.5);
  EXPECT_DOUBLE_EQ(r[1], 0.25);
}

TEST(Analysis, GrowthConstantOfPlantedExponential) {
  std::vector<double> t, lp;
  for (int i = 0; i <= 20; ++i) {
    t.push_back(0.05 * i);
    lp.push_back(2.0 * std::exp(0.3 * 2.0 * t.back()));
  }
  EXPECT_NEAR(growth_constant(t, lp, 2.0), 0.3, 1e-12);
}
