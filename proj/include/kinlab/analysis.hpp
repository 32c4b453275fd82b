#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kinlab/common.hpp"
#include "kinlab/rng.hpp"
#include "kinlab/slab.hpp"
#include "kinlab/velocity.hpp"

namespace kinlab {

// exp(-inf_{s >= 0} [nu0 (1+s)^kappa t + c s^zeta])
double decay_envelope(double t, double kappa, double c, double zeta, double nu0 = 4.0 * kPi);

// The exponent itself, inf_s [...]; use when the envelope underflows.
double decay_exponent(double t, double kappa, double c, double zeta, double nu0 = 4.0 * kPi);

// Minimizing speed of the envelope objective, for diagnostics.
double envelope_argmin(double t, double kappa, double c, double zeta, double nu0 = 4.0 * kPi);

struct DecayFit {
  double lambda_hat = 0.0;
  double alpha_hat = 0.0;
  double log_prefactor = 0.0;
  double residual = 0.0;  // rms of log residuals
  double t_min = 0.0, t_max = 0.0;
  int points = 0;
};

// Least squares of log v = log C - lambda t^alpha, profiled over alpha.
DecayFit fit_stretched_exponential(const std::vector<double>& t, const std::vector<double>& v,
                                   double t_min, double t_max);

// Same fit on log values (no underflow for long horizons).
DecayFit fit_stretched_exponential_log(const std::vector<double>& t,
                                       const std::vector<double>& log_v, double t_min,
                                       double t_max);

// Running maximum from the right: the smallest nonincreasing majorant.
std::vector<double> decreasing_envelope(const std::vector<double>& v);

struct IterationReport {
  std::vector<double> A;      // A_i = max(a_i .. a_{i+k})
  std::vector<double> bound;  // right side for i >= k+1 (NaN before)
  int hypothesis_violations = 0;
  int bound_violations = 0;
  double min_slack = 0.0;  // min over checked i of bound_i - A_i
};

IterationReport iteration_bound(const std::vector<double>& a, int k, double D,
                                double rel_tol = 1e-12);

// Sequence with a_{i+1+k} = U_i (A_i / 8 + D), U_i uniform in [0, 1].
std::vector<double> random_iteration_sequence(CounterRng& rng, int length, int k, double D);

struct FieldNorms {
  double sup_w = 0.0;
  double l2 = 0.0;
  double lp = 0.0;
  double boundary_sup_w = 0.0;
  double boundary_lp = 0.0;
};

// Norms of f(v, x) on a slab, per unit transverse area. Wall nodes with
// |v1| < grazing are left out of the sup norms.
FieldNorms norms(const Matrix& f, const SlabGrid& slab, const VelocityGrid& grid,
                 const WeightSpec& w, double p, double grazing = 1e-3);

// int int f sqrt(mu) dv dx
double mass(const Matrix& f, const SlabGrid& slab, const VelocityGrid& grid);

// Ratios d_{j+1}/d_j of successive differences.
std::vector<double> contraction_ratios(const std::vector<double>& diffs);

// Smallest C with log(lp(t)/lp(0)) <= C * Mbar * t over the series (t > 0).
double growth_constant(const std::vector<double>& t, const std::vector<double>& lp, double Mbar);

}  // namespace kinlab
