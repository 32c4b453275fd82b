#include "kinlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kinlab {

namespace {

double envelope_objective(double s, double t, double kappa, double c, double zeta, double nu0) {
  return nu0 * std::pow(1.0 + s, kappa) * t + c * std::pow(s, zeta);
}

template <class F>
double golden_min(F&& f, double a, double b, double tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double envelope_argmin(double t, double kappa, double c, double zeta, double nu0) {
  require(t >= 0.0, "envelope time must be nonnegative");
  require(kappa > -3.0 && kappa < 0.0, "kappa must lie in (-3, 0)");
  require(c > 0.0 && zeta > 0.0 && nu0 > 0.0, "envelope constants must be positive");
  if (t == 0.0) return 0.0;
  auto f = [&](double s) { return envelope_objective(s, t, kappa, c, zeta, nu0); };
  // coarse log scan guards the bracket
  const int N = 240;
  double best_s = 0.0, best = f(0.0);
  int best_k = -1;
  std::vector<double> s(N);
  for (int k = 0; k < N; ++k) {
    s[k] = std::pow(10.0, -4.0 + 12.0 * k / (N - 1));
    const double v = f(s[k]);
    if (v < best) best = v, best_s = s[k], best_k = k;
  }
  if (best_k < 0) return golden_min(f, 0.0, s[0], 1e-14);
  const double lo = best_k == 0 ? 0.0 : s[best_k - 1];
  const double hi = best_k == N - 1 ? s[N - 1] : s[best_k + 1];
  (void)best_s;
  return golden_min(f, lo, hi, 1e-14);
}

double decay_exponent(double t, double kappa, double c, double zeta, double nu0) {
  const double s = envelope_argmin(t, kappa, c, zeta, nu0);
  return envelope_objective(s, t, kappa, c, zeta, nu0);
}

double decay_envelope(double t, double kappa, double c, double zeta, double nu0) {
  return std::exp(-decay_exponent(t, kappa, c, zeta, nu0));
}

DecayFit fit_stretched_exponential(const std::vector<double>& t, const std::vector<double>& v,
                                   double t_min, double t_max) {
  require(t.size() == v.size(), "series lengths differ");
  std::vector<double> lv(v.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= t_min && t[i] <= t_max && !(v[i] > 0.0))
      throw NumericalError("nonpositive value in fit window");
    lv[i] = v[i] > 0.0 ? std::log(v[i]) : -std::numeric_limits<double>::infinity();
  }
  return fit_stretched_exponential_log(t, lv, t_min, t_max);
}

DecayFit fit_stretched_exponential_log(const std::vector<double>& t,
                                       const std::vector<double>& log_v, double t_min,
                                       double t_max) {
  require(t.size() == log_v.size(), "series lengths differ");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_min || t[i] > t_max) continue;
    if (!std::isfinite(log_v[i])) throw NumericalError("nonpositive value in fit window");
    x.push_back(t[i]);
    y.push_back(log_v[i]);
  }
  if (x.size() < 20) throw NumericalError("fewer than 20 points in fit window");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1]) || !(y[i] < y[i - 1]))
      throw NumericalError("tail is not strictly decreasing in the fit window");
  const int n = static_cast<int>(x.size());
  // for fixed alpha the model is linear in (log C, lambda)
  auto solve = [&](double alpha, double& a, double& lam) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double scale = std::pow(x.back(), alpha);
    for (int i = 0; i < n; ++i) {
      const double u = std::pow(x[i], alpha) / scale;
      sx += u;
      sy += y[i];
      sxx += u * u;
      sxy += u * y[i];
    }
    const double det = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / det;
    a = (sy - slope * sx) / n;
    lam = -slope / scale;
    double sse = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - (a - lam * std::pow(x[i], alpha));
      sse += r * r;
    }
    return sse;
  };
  double a = 0, lam = 0;
  double best_alpha = 0.02, best = std::numeric_limits<double>::infinity();
  for (double al = 0.02; al <= 2.0 + 1e-12; al += 0.01) {
    const double sse = solve(al, a, lam);
    if (sse < best) best = sse, best_alpha = al;
  }
  const double alpha = golden_min([&](double al) { return solve(al, a, lam); },
                                  std::max(1e-3, best_alpha - 0.01), best_alpha + 0.01, 1e-12);
  DecayFit fit;
  const double sse = solve(alpha, a, lam);
  fit.alpha_hat = alpha;
  fit.lambda_hat = lam;
  fit.log_prefactor = a;
  fit.residual = std::sqrt(sse / n);
  fit.t_min = x.front();
  fit.t_max = x.back();
  fit.points = n;
  return fit;
}

std::vector<double> decreasing_envelope(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = v.size(); i-- > 0;) {
    m = std::max(m, v[i]);
    out[i] = m;
  }
  return out;
}

IterationReport iteration_bound(const std::vector<double>& a, int k, double D, double rel_tol) {
  require(k >= 1, "k must be a positive integer");
  require(D >= 0.0, "D must be nonnegative");
  const int N = static_cast<int>(a.size());
  require(N >= 2 * (k + 1), "sequence too short for the lemma");
  for (double x : a) require(x >= 0.0, "sequence entries must be nonnegative");
  IterationReport r;
  const int M = N - k;
  r.A.resize(M);
  for (int i = 0; i < M; ++i) r.A[i] = *std::max_element(a.begin() + i, a.begin() + i + k + 1);
  for (int i = 0; i + 1 + k < N && i < M; ++i) {
    const double rhs = r.A[i] / 8.0 + D;
    if (a[i + 1 + k] > rhs * (1.0 + rel_tol)) ++r.hypothesis_violations;
  }
  const double head = *std::max_element(r.A.begin(), r.A.begin() + std::min(M, k + 1));
  r.bound.assign(M, std::numeric_limits<double>::quiet_NaN());
  r.min_slack = std::numeric_limits<double>::infinity();
  for (int i = k + 1; i < M; ++i) {
    r.bound[i] = std::pow(0.125, i / (k + 1)) * head + (8.0 + k) / 7.0 * D;
    const double slack = r.bound[i] - r.A[i];
    r.min_slack = std::min(r.min_slack, slack);
    if (slack < -rel_tol * std::max(1.0, r.bound[i])) ++r.bound_violations;
  }
  return r;
}

std::vector<double> random_iteration_sequence(CounterRng& rng, int length, int k, double D) {
  std::vector<double> a(length);
  for (int i = 0; i <= k && i < length; ++i) a[i] = 10.0 * rng.uniform();
  for (int j = k + 1; j < length; ++j) {
    const int i = j - 1 - k;
    const double A = *std::max_element(a.begin() + i, a.begin() + i + k + 1);
    a[j] = (1.0 - rng.uniform()) * (A / 8.0 + D);
  }
  return a;
}

FieldNorms norms(const Matrix& f, const SlabGrid& slab, const VelocityGrid& grid,
                 const WeightSpec& w, double p, double grazing) {
  require(f.rows() == grid.size() && f.cols() == slab.nodes(), "field shape does not match grids");
  require(p >= 1.0, "p must be at least 1");
  const Vector wv = weight_field(grid, w);
  const double h3 = grid.weight();
  FieldNorms r;
  double l2 = 0.0, lp = 0.0, blp = 0.0;
  for (int j = 0; j < f.cols(); ++j) {
    const bool wall = j == 0 || j == f.cols() - 1;
    for (int i = 0; i < f.rows(); ++i) {
      const double a = std::abs(f(i, j));
      const double v1 = grid.coords(i, 0);
      const bool grazing_node = wall && std::abs(v1) < grazing;
      if (!grazing_node) r.sup_w = std::max(r.sup_w, wv[i] * a);
      if (wall && !grazing_node) r.boundary_sup_w = std::max(r.boundary_sup_w, wv[i] * a);
      l2 += slab.weight[j] * h3 * a * a;
      lp += slab.weight[j] * h3 * std::pow(a, p);
      if (wall) blp += std::abs(v1) * h3 * std::pow(a, p);
    }
  }
  r.l2 = std::sqrt(l2);
  r.lp = std::pow(lp, 1.0 / p);
  r.boundary_lp = std::pow(blp, 1.0 / p);
  return r;
}

double mass(const Matrix& f, const SlabGrid& slab, const VelocityGrid& grid) {
  const Vector smu = sqrt_maxwellian_field(grid);
  return grid.weight() * (smu.transpose() * f * slab.weight)(0, 0);
}

std::vector<double> contraction_ratios(const std::vector<double>& diffs) {
  std::vector<double> r;
  for (std::size_t j = 1; j < diffs.size(); ++j)
    r.push_back(diffs[j - 1] > 0.0 ? diffs[j] / diffs[j - 1] : 0.0);
  return r;
}

double growth_constant(const std::vector<double>& t, const std::vector<double>& lp, double Mbar) {
  require(t.size() == lp.size() && !t.empty(), "series lengths differ");
  require(Mbar > 0.0 && lp[0] > 0.0, "growth fit needs positive Mbar and initial norm");
  double C = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[0]) C = std::max(C, std::log(lp[i] / lp[0]) / (Mbar * (t[i] - t[0])));
  return C;
}

}  // namespace kinlab
