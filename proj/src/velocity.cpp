#include "kinlab/velocity.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kinlab {

VelocityGrid VelocityGrid::make(double v_max, int n_per_axis) {
  require(v_max > 0.0, "v_max must be positive");
  require(n_per_axis >= 2, "need at least two nodes per axis");
  VelocityGrid g;
  g.v_max = v_max;
  g.n = n_per_axis;
  g.h = 2.0 * v_max / n_per_axis;
  g.coords.resize(g.size(), 3);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k) {
        const int idx = g.index(i, j, k);
        g.coords(idx, 0) = g.axis_value(i);
        g.coords(idx, 1) = g.axis_value(j);
        g.coords(idx, 2) = g.axis_value(k);
      }
  return g;
}

std::uint64_t VelocityGrid::hash() const {
  std::uint64_t bits;
  std::memcpy(&bits, &v_max, sizeof bits);
  return mix64(mix64(bits) ^ static_cast<std::uint64_t>(n));
}

std::string weight_admissibility_error(double beta, double varpi, double zeta,
                                       double beta_min) {
  std::ostringstream os;
  if (!(zeta > 0.0 && zeta <= 2.0))
    os << "zeta=" << zeta << " outside (0, 2]";
  else if (zeta == 2.0 && !(varpi > 0.0 && varpi < 0.125))
    os << "varpi=" << varpi << " outside (0, 1/8) required when zeta=2";
  else if (zeta < 2.0 && !(varpi > 0.0))
    os << "varpi=" << varpi << " must be positive";
  else if (!(beta > beta_min))
    os << "beta=" << beta << " must exceed " << beta_min;
  return os.str();
}

WeightSpec WeightSpec::make(double beta, double varpi, double zeta, double beta_min) {
  const std::string err = weight_admissibility_error(beta, varpi, zeta, beta_min);
  if (!err.empty()) throw ParameterError("inadmissible weight: " + err);
  return WeightSpec{beta, varpi, zeta};
}

double WeightSpec::operator()(const Vec3& v) const { return weight(*this, v); }

double maxwellian(const Vec3& v, double theta) {
  if (!(theta > 0.0)) throw ParameterError("temperature must be positive");
  return std::exp(-0.5 * v.squaredNorm() / theta) / (2.0 * kPi * theta * theta);
}

double weight(const WeightSpec& spec, const Vec3& v) {
  const double s2 = v.squaredNorm();
  return std::pow(1.0 + s2, 0.5 * spec.beta) * std::exp(spec.varpi * std::pow(std::sqrt(s2), spec.zeta));
}

Vector maxwellian_field(const VelocityGrid& grid, double theta) {
  Vector out(grid.size());
  for (int i = 0; i < grid.size(); ++i) out[i] = maxwellian(grid.node(i), theta);
  return out;
}

Vector sqrt_maxwellian_field(const VelocityGrid& grid) {
  return maxwellian_field(grid, 1.0).cwiseSqrt();
}

Vector weight_field(const VelocityGrid& grid, const WeightSpec& spec) {
  Vector out(grid.size());
  for (int i = 0; i < grid.size(); ++i) out[i] = weight(spec, grid.node(i));
  return out;
}

double flux_normalization(const VelocityGrid& grid, double theta, const Vec3& n) {
  double s = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    const Vec3 v = grid.node(i);
    const double vn = v.dot(n);
    if (vn > 0.0) s += maxwellian(v, theta) * vn;
  }
  s *= grid.weight();
  int axis = -1;
  for (int a = 0; a < 3; ++a)
    if (std::abs(std::abs(n[a]) - 1.0) < 1e-14) axis = a;
  if (axis < 0) return s;
  // plane density int mu_theta(v.n = 0) dv_t on the same tangential nodes
  double plane = 0.0;
  const int b = (axis + 1) % 3, c = (axis + 2) % 3;
  for (int j = 0; j < grid.n; ++j)
    for (int k = 0; k < grid.n; ++k) {
      Vec3 v = Vec3::Zero();
      v[b] = grid.axis_value(j);
      v[c] = grid.axis_value(k);
      plane += maxwellian(v, theta);
    }
  plane *= grid.h * grid.h;
  return s - grid.h * grid.h / 24.0 * plane;
}

void tangent_frame(const Vec3& n, Vec3& t1, Vec3& t2) {
  const Vec3 a = std::abs(n[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  t1 = (a - a.dot(n) * n).normalized();
  t2 = n.cross(t1);
}

Vec3 sample_flux_velocity(CounterRng& rng, double theta, const Vec3& n) {
  require(theta > 0.0, "temperature must be positive");
  Vec3 t1, t2;
  tangent_frame(n, t1, t2);
  const double sd = std::sqrt(theta);
  const double a = sd * rng.normal();
  const double b = sd * rng.normal();
  const double s = std::sqrt(-2.0 * theta * std::log(rng.uniform()));
  return s * n + a * t1 + b * t2;
}

double PowerLawWeights::operator()(int i, int j, int k) const {
  if (std::abs(i) <= reach && std::abs(j) <= reach && std::abs(k) <= reach) {
    const int w = 2 * reach + 1;
    return near[((i + reach) * w + (j + reach)) * w + (k + reach)];
  }
  const double r = h * std::sqrt(double(i * i + j * j + k * k));
  return std::pow(r, kappa) * h * h * h;
}

PowerLawWeights power_law_weights(double h, double kappa, const LatticeRuleOptions& opt) {
  require(kappa > -3.0 && kappa < 0.0, "kappa must lie in (-3, 0)");
  CorrectedLatticeRule rule(h, opt);
  const auto& zq = rule.quad_points();
  Vector kq(zq.size());
  for (std::size_t q = 0; q < zq.size(); ++q) kq[q] = std::pow(zq[q].norm(), kappa);
  const auto& offs = rule.offsets();
  Vector kd(offs.size());
  for (std::size_t d = 0; d < offs.size(); ++d) {
    const Vec3 z(offs[d][0], offs[d][1], offs[d][2]);
    kd[d] = std::pow(h * z.norm(), kappa);
  }
  const Vector c = rule.corrections(kq, kd);

  PowerLawWeights W;
  W.h = h;
  W.kappa = kappa;
  W.reach = opt.stencil_radius;
  const int w = 2 * W.reach + 1;
  W.near.assign(w * w * w, 0.0);
  const auto& st = rule.stencil();
  for (std::size_t s = 0; s < st.size(); ++s) {
    const int i = st[s][0], j = st[s][1], k = st[s][2];
    const int idx = ((i + W.reach) * w + (j + W.reach)) * w + (k + W.reach);
    const double base = (i == 0 && j == 0 && k == 0)
                            ? 0.0
                            : std::pow(h * std::sqrt(double(i * i + j * j + k * k)), kappa) * h * h * h;
    W.near[idx] = base + c[s];
  }
  // even kernel: enforce W(d) = W(-d)
  for (int idx = 0; idx < w * w * w; ++idx) {
    const int mirror = w * w * w - 1 - idx;
    if (mirror > idx) {
      const double avg = 0.5 * (W.near[idx] + W.near[mirror]);
      W.near[idx] = W.near[mirror] = avg;
    }
  }
  return W;
}

namespace {

Vector frequency_with(const VelocityGrid& grid, double kappa, double b0,
                      const LatticeRuleOptions& opt) {
  const PowerLawWeights W = power_law_weights(grid.h, kappa, opt);
  const int n = grid.n;
  const int span = 2 * n - 1;
  std::vector<double> table(span * span * span);
  for (int i = -(n - 1); i < n; ++i)
    for (int j = -(n - 1); j < n; ++j)
      for (int k = -(n - 1); k < n; ++k)
        table[((i + n - 1) * span + (j + n - 1)) * span + (k + n - 1)] = W(i, j, k);
  const Vector mu = maxwellian_field(grid, 1.0);
  Vector nu(grid.size());
#pragma omp parallel for schedule(static)
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const double* row = &table[((i - a + n - 1) * span + (j - b + n - 1)) * span + (n - 1 - c)];
            const double* m = &mu[grid.index(i, j, 0)];
            for (int k = 0; k < n; ++k) s += row[k] * m[k];
          }
        nu[grid.index(a, b, c)] = 2.0 * kPi * b0 * s;
      }
  return nu;
}

}  // namespace

Vector collision_frequency(const VelocityGrid& grid, double kappa, double b0,
                           const FrequencyOptions& opt) {
  require(b0 > 0.0, "angular amplitude must be positive");
  const Vector nu = frequency_with(grid, kappa, b0, opt.rule);
  LatticeRuleOptions coarse = opt.rule;
  coarse.duffy.face_order = std::max(2, opt.rule.duffy.face_order - 2);
  coarse.duffy.radial_order = std::max(2, opt.rule.duffy.radial_order - 2);
  coarse.duffy.singular_order = std::max(2, opt.rule.duffy.singular_order - 4);
  const Vector nu_c = frequency_with(grid, kappa, b0, coarse);
  const double gap = ((nu - nu_c).array().abs() / nu.array().abs()).maxCoeff();
  if (!(gap <= opt.refinement_tol))
    throw NumericalError("collision frequency refinement gap " + std::to_string(gap) +
                         " exceeds tolerance");
  if (!(nu.minCoeff() > 0.0)) throw NumericalError("collision frequency not positive");
  return nu;
}

double collision_frequency_at(const Vec3& v, double h, double kappa, double b0,
                              const LatticeRuleOptions& opt) {
  const PowerLawWeights W = power_law_weights(h, kappa, opt);
  const double cutoff = 9.0;
  const int D = static_cast<int>(std::ceil((v.norm() + cutoff) / h));
  double s = 0.0;
  for (int i = -D; i <= D; ++i)
    for (int j = -D; j <= D; ++j)
      for (int k = -D; k <= D; ++k) {
        const Vec3 u = v + h * Vec3(i, j, k);
        if (u.norm() > cutoff) continue;
        s += W(i, j, k) * maxwellian(u, 1.0);
      }
  return 2.0 * kPi * b0 * s;
}

void write_frequency_csv(const std::string& path, const VelocityGrid& grid, const Vector& nu) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os.precision(17);
  os << "speed,nu\n";
  for (int i = 0; i < grid.size(); ++i) os << grid.node(i).norm() << ',' << nu[i] << '\n';
}

double WallTemperature::theta(const Vec3& x) const {
  double g = 1.0;
  switch (profile) {
    case WallProfile::Constant:
      g = 1.0;
      break;
    case WallProfile::AxisLinear:
      g = std::clamp(x[axis] / extent, -1.0, 1.0);
      break;
    case WallProfile::Harmonic: {
      const double r = x.norm();
      g = r > 0.0 ? x[axis] / r : 0.0;
      break;
    }
  }
  return 1.0 + delta * g;
}

double WallTemperature::realized_delta(const std::vector<Vec3>& boundary_points) const {
  double d = 0.0;
  for (const auto& x : boundary_points) d = std::max(d, std::abs(theta(x) - 1.0));
  return d;
}

void WallTemperature::validate() const {
  require(delta >= 0.0 && delta < 1.0, "wall temperature variation delta must lie in [0, 1)");
  require(axis >= 0 && axis < 3, "wall profile axis must be 0, 1 or 2");
  require(extent > 0.0, "wall profile extent must be positive");
}

}  // namespace kinlab
