#include "kinlab/collision.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

namespace kinlab {

double bessel_i0e(double x) {
  x = std::abs(x);
  if (x < 30.0) return std::cyl_bessel_i(0.0, x) * std::exp(-x);
  // asymptotic series, accurate to ~1e-10 beyond x = 30
  const double t = 1.0 / (8.0 * x);
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= (2.0 * k - 1.0) * (2.0 * k - 1.0) * t / k;
    sum += term;
  }
  return sum / std::sqrt(2.0 * kPi * x);
}

double cutoff_chi(double s, double m) {
  if (s <= m) return 1.0;
  if (s >= 2.0 * m) return 0.0;
  const double t = (s - m) / m;
  return 1.0 - t * t * (3.0 - 2.0 * t);
}

namespace {

struct GL {
  std::vector<double> x, w;
  explicit GL(int n) { gauss_legendre(n, x, w); }
};

const GL& gl8() {
  static const GL g(8);
  return g;
}

}  // namespace

double transverse_integral(double s, double r, double kappa, double m) {
  const double p = 0.5 * (kappa - 1.0);
  auto chi = [&](double rho) { return m > 0.0 ? cutoff_chi(std::sqrt(s * s + rho * rho), m) : 1.0; };
  auto G = [&](double rho) {
    const double d = rho - r;
    return std::exp(-0.5 * d * d) * bessel_i0e(rho * r);
  };
  double rho_end = r + 12.0;
  double kink = -1.0;
  if (m > 0.0) {
    if (s >= 2.0 * m) return 0.0;
    rho_end = std::min(rho_end, std::sqrt(4.0 * m * m - s * s));
    if (s < m) kink = std::sqrt(m * m - s * s);
  }
  const double rho_start = std::max(0.0, r - 12.0);
  if (rho_end <= rho_start) return 0.0;
  const GL& g = gl8();
  double total = 0.0;

  double rho_a = rho_start;
  if (rho_start == 0.0) {
    rho_a = std::min(rho_end, 1.0);
    if (kink > 0.0) rho_a = std::min(rho_a, kink);
    // rho = s sinh(tau)
    const double tau_a = std::asinh(rho_a / s);
    const int panels = std::max(1, static_cast<int>(std::ceil(tau_a / 0.5)));
    const double dt = tau_a / panels;
    const double pref = std::pow(s, kappa + 1.0);
    for (int k = 0; k < panels; ++k)
      for (int q = 0; q < 8; ++q) {
        const double tau = dt * (k + 0.5 * (g.x[q] + 1.0));
        const double sh = std::sinh(tau), ch = std::cosh(tau);
        const double rho = s * sh;
        total += 0.5 * dt * g.w[q] * pref * sh * std::pow(ch, kappa) * G(rho) * chi(rho);
      }
  }
  std::vector<double> cuts{rho_a};
  if (kink > rho_a && kink < rho_end) cuts.push_back(kink);
  cuts.push_back(rho_end);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double lo = cuts[c], hi = cuts[c + 1];
    if (hi <= lo) continue;
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / 0.5)));
    const double dr = (hi - lo) / panels;
    for (int k = 0; k < panels; ++k)
      for (int q = 0; q < 8; ++q) {
        const double rho = lo + dr * (k + 0.5 * (g.x[q] + 1.0));
        total += 0.5 * dr * g.w[q] * rho * std::pow(s * s + rho * rho, p) * G(rho) * chi(rho);
      }
  }
  return 2.0 * kPi * total;
}

namespace {

constexpr double kTableRMax = 20.0;
constexpr double kTableSMax = 30.0;

double catmull(double p0, double p1, double p2, double p3, double t) {
  return p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
}

}  // namespace

TransverseTable::TransverseTable(double kappa, double m) : kappa_(kappa), m_(m) {
  require(kappa > -3.0 && kappa < 0.0, "kappa must lie in (-3, 0)");
  require(m >= 0.0, "cutoff must be nonnegative");
  const double s_lo = m > 0.0 ? 1e-5 * m : 1e-5;
  const double s_hi = m > 0.0 ? 2.0 * m : kTableSMax;
  nu_ = m > 0.0 ? 121 : 201;
  nr_ = 161;
  u0_ = std::log(s_lo);
  du_ = (std::log(s_hi) - u0_) / (nu_ - 1);
  dr_ = kTableRMax / (nr_ - 1);
  data_.assign(static_cast<std::size_t>(nu_) * nr_, 0.0);
  if (m > 0.0) full_ = std::make_shared<const TransverseTable>(kappa, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int a = 0; a < nu_; ++a) {
    const double s = std::exp(u0_ + a * du_);
    for (int b = 0; b < nr_; ++b) {
      const double r = b * dr_;
      double& out = data_[static_cast<std::size_t>(a) * nr_ + b];
      if (m > 0.0) {
        const double full = transverse_integral(s, r, kappa, 0.0);
        const double cut = a == nu_ - 1 ? 0.0 : transverse_integral(s, r, kappa, m);
        out = full > 0.0 ? cut / full : 0.0;
      } else {
        out = std::log(transverse_integral(s, r, kappa, 0.0));
      }
    }
  }
}

double TransverseTable::lookup(double u, double r) const {
  const double x = (u - u0_) / du_;
  const double y = r / dr_;
  const int i = std::clamp(static_cast<int>(std::floor(x)), 0, nu_ - 2);
  const int j = std::clamp(static_cast<int>(std::floor(y)), 0, nr_ - 2);
  const double tx = x - i, ty = y - j;
  // r is even: reflect at r = 0, clamp elsewhere
  auto at = [&](int a, int b) {
    a = std::clamp(a, 0, nu_ - 1);
    b = std::min(b < 0 ? -b : b, nr_ - 1);
    return data_[static_cast<std::size_t>(a) * nr_ + b];
  };
  double col[4];
  for (int k = 0; k < 4; ++k)
    col[k] = catmull(at(i - 1 + k, j - 1), at(i - 1 + k, j), at(i - 1 + k, j + 1),
                     at(i - 1 + k, j + 2), ty);
  return catmull(col[0], col[1], col[2], col[3], tx);
}

double TransverseTable::operator()(double s, double r) const {
  const double u = std::log(s);
  r = std::min(r, kTableRMax);
  if (m_ > 0.0) {
    if (s >= 2.0 * m_) return 0.0;
    const double ratio = std::clamp(lookup(std::max(u, u0_), r), 0.0, 1.0);
    return ratio * (*full_)(s, r);
  }
  if (s > kTableSMax) return 0.0;
  if (u < u0_) {
    const double l0 = lookup(u0_, r);
    const double l1 = lookup(u0_ + du_, r);
    return std::exp(l0 + (u - u0_) * (l1 - l0) / du_);
  }
  return std::exp(lookup(u, r));
}

double gain_kernel(const Vec3& v, const Vec3& eta, double b0, const TransverseTable& table) {
  const Vec3 d = eta - v;
  const double s = d.norm();
  if (s == 0.0) throw NumericalError("gain kernel evaluated on the diagonal");
  const Vec3 a = 0.5 * (v + eta);
  const double a_par = a.dot(d) / s;
  const double r = std::sqrt(std::max(0.0, a.squaredNorm() - a_par * a_par));
  const double I = table(s, r);
  if (I == 0.0) return 0.0;
  return 4.0 * b0 / s / (2.0 * kPi) * std::exp(-s * s / 8.0 - 0.5 * a_par * a_par) * I;
}

namespace {

using Kernel = std::function<double(const Vec3&, const Vec3&)>;

// Stencil neighbour of node idx, or -1 outside the grid.
int neighbour(const VelocityGrid& g, int idx, const std::array<int, 3>& d) {
  const int k = idx % g.n, j = (idx / g.n) % g.n, i = idx / (g.n * g.n);
  const int a = i + d[0], b = j + d[1], c = k + d[2];
  if (a < 0 || b < 0 || c < 0 || a >= g.n || b >= g.n || c >= g.n) return -1;
  return g.index(a, b, c);
}

Vector row_correction(const VelocityGrid& grid, const CorrectedLatticeRule& rule, const Kernel& k,
                      int row) {
  const Vec3 v = grid.node(row);
  const auto& zq = rule.quad_points();
  Vector kq(zq.size());
  for (std::size_t q = 0; q < zq.size(); ++q) kq[q] = k(v, v + zq[q]);
  const auto& offs = rule.offsets();
  Vector kd(offs.size());
  for (std::size_t d = 0; d < offs.size(); ++d)
    kd[d] = k(v, v + grid.h * Vec3(offs[d][0], offs[d][1], offs[d][2]));
  return rule.corrections(kq, kd);
}

LatticeRuleOptions coarser(const LatticeRuleOptions& o) {
  LatticeRuleOptions c = o;
  c.duffy.face_order = std::max(2, o.duffy.face_order / 2);
  c.duffy.radial_order = std::max(2, o.duffy.radial_order / 2);
  c.duffy.singular_order = std::max(2, o.duffy.singular_order / 2);
  return c;
}

// Worst relative change of corrected near-field entries on a few sample rows
// when the singular rule is halved.
double refinement_gap(const VelocityGrid& grid, const LatticeRuleOptions& fine_opt,
                      const Kernel& k) {
  const CorrectedLatticeRule fine(grid.h, fine_opt);
  const CorrectedLatticeRule coarse(grid.h, coarser(fine_opt));
  const int n = grid.n;
  const int probes[][3] = {{n / 2, n / 2, n / 2}, {n / 2 - 1, n / 2, n / 2}, {n / 4, n / 2, n / 2},
                           {n / 4, n / 4, n / 2}, {n / 3, 2 * n / 3, n / 2}};
  double gap = 0.0;
  for (const auto& p : probes) {
    const int row = grid.index(p[0], p[1], p[2]);
    const Vec3 v = grid.node(row);
    const Vector cf = row_correction(grid, fine, k, row);
    const Vector cc = row_correction(grid, coarse, k, row);
    double scale = 0.0;
    const auto& st = fine.stencil();
    for (std::size_t s = 0; s < st.size(); ++s) {
      const Vec3 d(st[s][0], st[s][1], st[s][2]);
      const double base = d.squaredNorm() > 0.0 ? k(v, v + grid.h * d) * grid.weight() : 0.0;
      scale = std::max(scale, std::abs(base + cf[s]));
    }
    if (scale > 0.0) gap = std::max(gap, (cf - cc).cwiseAbs().maxCoeff() / scale);
  }
  return gap;
}

// Lattice weights for a radial kernel, near table on |d|_inf <= reach.
struct RadialWeights {
  double h = 0.0;
  int reach = 0;
  std::vector<double> near;
  std::function<double(double)> f;
  double operator()(int i, int j, int k) const {
    if (std::abs(i) <= reach && std::abs(j) <= reach && std::abs(k) <= reach) {
      const int w = 2 * reach + 1;
      return near[((i + reach) * w + (j + reach)) * w + (k + reach)];
    }
    return f(h * std::sqrt(double(i * i + j * j + k * k))) * h * h * h;
  }
};

RadialWeights radial_weights(double h, std::function<double(double)> f, const LatticeRuleOptions& opt) {
  const CorrectedLatticeRule rule(h, opt);
  const auto& zq = rule.quad_points();
  Vector kq(zq.size());
  for (std::size_t q = 0; q < zq.size(); ++q) kq[q] = f(zq[q].norm());
  const auto& offs = rule.offsets();
  Vector kd(offs.size());
  for (std::size_t d = 0; d < offs.size(); ++d)
    kd[d] = f(h * Vec3(offs[d][0], offs[d][1], offs[d][2]).norm());
  const Vector c = rule.corrections(kq, kd);
  RadialWeights W;
  W.h = h;
  W.f = f;
  W.reach = std::max(opt.stencil_radius, static_cast<int>(std::ceil(rule.reach() / h)));
  const int w = 2 * W.reach + 1;
  W.near.assign(w * w * w, 0.0);
  for (int i = -W.reach; i <= W.reach; ++i)
    for (int j = -W.reach; j <= W.reach; ++j)
      for (int k = -W.reach; k <= W.reach; ++k)
        if (i || j || k)
          W.near[((i + W.reach) * w + (j + W.reach)) * w + (k + W.reach)] =
              f(h * std::sqrt(double(i * i + j * j + k * k))) * h * h * h;
  const auto& st = rule.stencil();
  for (std::size_t s = 0; s < st.size(); ++s)
    W.near[((st[s][0] + W.reach) * w + (st[s][1] + W.reach)) * w + (st[s][2] + W.reach)] += c[s];
  for (int idx = 0; idx < w * w * w; ++idx) {
    const int mirror = w * w * w - 1 - idx;
    if (mirror > idx) W.near[idx] = W.near[mirror] = 0.5 * (W.near[idx] + W.near[mirror]);
  }
  return W;
}

}  // namespace

Matrix CollisionTables::L() const {
  Matrix out = -K;
  out.diagonal() += nu;
  return out;
}

CollisionTables assemble_K(const VelocityGrid& grid, double kappa, double b0,
                           const AssemblyOptions& opt) {
  require(kappa > -3.0 && kappa < 0.0, "kappa must lie in (-3, 0)");
  require(b0 > 0.0, "angular amplitude must be positive");
  require(opt.rule.window_sigma > 0.0, "full kernel needs a windowed lattice rule");
  const int n = grid.size();
  const double h3 = grid.weight();
  const TransverseTable table(kappa);
  const Kernel k2 = [&](const Vec3& v, const Vec3& e) { return gain_kernel(v, e, b0, table); };

  CollisionTables T;
  T.grid = grid;
  T.kappa = kappa;
  T.b0 = b0;
  T.K.resize(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    const Vec3 v = grid.node(i);
    T.K(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) T.K(i, j) = k2(v, grid.node(j)) * h3;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) T.K(j, i) = T.K(i, j);

  const CorrectedLatticeRule rule(grid.h, opt.rule);
  const auto& st = rule.stencil();
  Matrix C(n, st.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n; ++i) C.row(i) = row_correction(grid, rule, k2, i).transpose();
  // symmetric split of the near-field corrections
  for (int i = 0; i < n; ++i)
    for (std::size_t s = 0; s < st.size(); ++s) {
      const int j = neighbour(grid, i, st[s]);
      if (j < 0) continue;
      if (opt.symmetrize) {
        T.K(i, j) += 0.5 * C(i, s);
        T.K(j, i) += 0.5 * C(i, s);
      } else {
        T.K(i, j) += C(i, s);
      }
    }

  const PowerLawWeights W = power_law_weights(grid.h, kappa, opt.rule);
  T.loss.resize(n, n);
  const int g = grid.n;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const int ai = i / (g * g), bi = (i / g) % g, ci = i % g;
    for (int j = 0; j < n; ++j) {
      const int aj = j / (g * g), bj = (j / g) % g, cj = j % g;
      T.loss(i, j) = 2.0 * kPi * b0 * W(aj - ai, bj - bi, cj - ci);
    }
  }
  const Vector mu = maxwellian_field(grid, 1.0);
  T.sqrt_mu = mu.cwiseSqrt();
  T.nu = T.loss * mu;
  T.K -= T.sqrt_mu.asDiagonal() * T.loss * T.sqrt_mu.asDiagonal();
  if (!(T.nu.minCoeff() > 0.0)) throw NumericalError("collision frequency not positive");

  T.refinement_gap = refinement_gap(grid, opt.rule, k2);
  if (opt.check_refinement && T.refinement_gap > opt.refinement_tol)
    throw NumericalError("kernel refinement gap " + std::to_string(T.refinement_gap) +
                         " exceeds tolerance");
  return T;
}

SparseMatrix assemble_cutoff(const VelocityGrid& grid, double kappa, double b0, double m,
                             const AssemblyOptions& opt) {
  require(kappa > -3.0 && kappa < 0.0, "kappa must lie in (-3, 0)");
  require(m > 0.0 && m <= 1.0, "cutoff m must lie in (0, 1]");
  const int n = grid.size();
  const double h3 = grid.weight();
  const TransverseTable table(kappa, m);
  const Kernel k2 = [&](const Vec3& v, const Vec3& e) { return gain_kernel(v, e, b0, table); };
  LatticeRuleOptions ro = opt.rule;
  ro.window_sigma = 0.0;
  ro.support = 2.0 * m;
  const CorrectedLatticeRule rule(grid.h, ro);
  const RadialWeights W1 = radial_weights(
      grid.h, [&](double r) { return r > 0.0 ? std::pow(r, kappa) * cutoff_chi(r, m) : 0.0; }, ro);
  const Vector smu = sqrt_maxwellian_field(grid);

  const int D = std::max(ro.stencil_radius, static_cast<int>(std::ceil(2.0 * m / grid.h)));
  std::vector<std::array<int, 3>> box;
  for (int a = -D; a <= D; ++a)
    for (int b = -D; b <= D; ++b)
      for (int c = -D; c <= D; ++c) box.push_back({a, b, c});
  const auto& st = rule.stencil();
  const int bw = 2 * D + 1;
  auto box_index = [&](const std::array<int, 3>& d) {
    return ((d[0] + D) * bw + (d[1] + D)) * bw + (d[2] + D);
  };

  // gain part: point values plus corrections, then symmetrized
  std::vector<std::vector<double>> rows(n, std::vector<double>(box.size(), 0.0));
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n; ++i) {
    const Vec3 v = grid.node(i);
    auto& r = rows[i];
    for (std::size_t b = 0; b < box.size(); ++b) {
      const Vec3 d(box[b][0], box[b][1], box[b][2]);
      if (d.squaredNorm() == 0.0 || grid.h * d.norm() >= 2.0 * m) continue;
      r[b] = k2(v, v + grid.h * d) * h3;
    }
    const Vector c = row_correction(grid, rule, k2, i);
    for (std::size_t s = 0; s < st.size(); ++s) r[box_index(st[s])] += c[s];
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i)
    for (std::size_t b = 0; b < box.size(); ++b) {
      const int j = neighbour(grid, i, box[b]);
      if (j < 0) continue;
      const std::array<int, 3> back{-box[b][0], -box[b][1], -box[b][2]};
      const double gain = 0.5 * (rows[i][b] + rows[j][box_index(back)]);
      const double loss = 2.0 * kPi * b0 * smu[i] * smu[j] * W1(box[b][0], box[b][1], box[b][2]);
      if (gain != 0.0 || loss != 0.0) trip.emplace_back(i, j, gain - loss);
    }
  SparseMatrix Km(n, n);
  Km.setFromTriplets(trip.begin(), trip.end());
  return Km;
}

void split_cutoff(CollisionTables& tables, double m, const AssemblyOptions& opt) {
  tables.Km = assemble_cutoff(tables.grid, tables.kappa, tables.b0, m, opt);
  tables.Kc = tables.K - Matrix(tables.Km);
  tables.m = m;
}

MacroProjection MacroProjection::make(const VelocityGrid& grid) {
  const int n = grid.size();
  const Vector smu = sqrt_maxwellian_field(grid);
  MacroProjection P;
  P.weight = grid.weight();
  P.basis.resize(n, 5);
  P.basis.col(0) = smu;
  for (int a = 0; a < 3; ++a) P.basis.col(1 + a) = grid.coords.col(a).cwiseProduct(smu);
  P.basis.col(4) = grid.coords.rowwise().squaredNorm().cwiseProduct(smu);
  // modified Gram-Schmidt, two passes
  for (int pass = 0; pass < 2; ++pass)
    for (int c = 0; c < 5; ++c) {
      for (int p = 0; p < c; ++p) P.basis.col(c) -= P.weight * P.basis.col(p).dot(P.basis.col(c)) * P.basis.col(p);
      P.basis.col(c) /= std::sqrt(P.weight * P.basis.col(c).squaredNorm());
    }
  return P;
}

Matrix conservative_L(const CollisionTables& tables, const MacroProjection& proj) {
  const Matrix L = tables.L();
  const Matrix& B = proj.basis;
  const double w = proj.weight;
  const Matrix LB = L * B;
  const Matrix BtLB = B.transpose() * LB;
  Matrix out = L;
  out.noalias() -= w * B * LB.transpose();
  out.noalias() -= w * LB * B.transpose();
  out.noalias() += (w * w) * B * BtLB * B.transpose();
  return 0.5 * (out + out.transpose());
}

Vector loss_frequency(const CollisionTables& tables, const Vector& F) { return tables.loss * F; }

Vector nu_star(const CollisionTables& tables, const Vector& F_star) {
  require(F_star.minCoeff() >= 0.0, "background density must be nonnegative");
  return tables.loss * F_star;
}

SandwichReport nu_star_sandwich(const Vector& nu, const Vector& nu_s) {
  SandwichReport r;
  const Vector ratio = nu_s.cwiseQuotient(nu);
  r.min_ratio = ratio.minCoeff();
  r.max_ratio = ratio.maxCoeff();
  r.ok = r.min_ratio >= 0.5 && r.max_ratio <= 1.5;
  return r;
}

Vector linearized_background(const CollisionTables& tables, const GainRule& rule,
                             const Vector& f_star, const Vector& f) {
  return -gamma(tables, rule, f_star, f).total() - gamma(tables, rule, f, f_star).total();
}

CollisionSample draw_collision(const Vec3& v, double kappa, CounterRng& rng) {
  // mixture: half |z|^kappa e^{-|z|^2/2}, half u ~ N(0, 2I)
  CollisionSample c;
  if (rng.uniform() < 0.5) {
    std::gamma_distribution<double> G(0.5 * (3.0 + kappa), 1.0);
    const double r = std::sqrt(2.0 * G(rng));
    const double ct = 2.0 * rng.uniform() - 1.0, ph = 2.0 * kPi * rng.uniform();
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    c.z = r * Vec3(st * std::cos(ph), st * std::sin(ph), ct);
  } else {
    const Vec3 u(std::sqrt(2.0) * rng.normal(), std::sqrt(2.0) * rng.normal(), std::sqrt(2.0) * rng.normal());
    c.z = u - v;
  }
  const double r = c.z.norm();
  const double z1 = 4.0 * kPi * std::pow(2.0, 0.5 * (1.0 + kappa)) * std::tgamma(0.5 * (3.0 + kappa));
  const double q1 = std::pow(r, kappa) * std::exp(-0.5 * r * r) / z1;
  const double q2 = std::pow(4.0 * kPi, -1.5) * std::exp(-0.25 * (v + c.z).squaredNorm());
  c.w = std::pow(r, kappa) / (0.5 * q1 + 0.5 * q2);
  // omega with density |cos| / (2 pi) about z; the 2 pi goes into the weight
  Vec3 e = r > 0.0 ? Vec3(c.z / r) : Vec3(0, 0, 1);
  Vec3 t1, t2;
  tangent_frame(e, t1, t2);
  const double cphi = std::sqrt(rng.uniform()) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  const double sphi = std::sqrt(std::max(0.0, 1.0 - cphi * cphi));
  const double az = 2.0 * kPi * rng.uniform();
  c.omega = cphi * e + sphi * (std::cos(az) * t1 + std::sin(az) * t2);
  return c;
}

CacheHeader cache_header(const VelocityGrid& grid, double kappa, double b0, double m,
                         const Matrix& M) {
  CacheHeader h;
  const std::uint64_t gh = grid.hash();
  h.grid_hash_hi = static_cast<double>(gh >> 32);
  h.grid_hash_lo = static_cast<double>(gh & 0xffffffffULL);
  h.v_max = grid.v_max;
  h.n = grid.n;
  h.kappa = kappa;
  h.b0 = b0;
  h.m = m;
  h.rows = static_cast<double>(M.rows());
  h.cols = static_cast<double>(M.cols());
  return h;
}

std::string cache_name(const VelocityGrid& grid, double kappa, double b0, double m,
                       const std::string& what) {
  std::ostringstream os;
  os << what << "_" << std::hex << grid.hash() << std::dec << "_k" << kappa << "_b" << b0 << "_m"
     << m << ".bin";
  return os.str();
}

// x86-64 and aarch64 are little-endian; the raw byte copy below relies on that.
static_assert(sizeof(double) == 8);

void save_matrix(const std::string& path, const CacheHeader& hdr, const Matrix& M) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  os.write(reinterpret_cast<const char*>(&hdr), sizeof(hdr));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = M;
  os.write(reinterpret_cast<const char*>(R.data()), static_cast<std::streamsize>(R.size() * 8));
  if (!os) throw Error("short write to " + path);
}

bool load_matrix(const std::string& path, const CacheHeader& expect, Matrix& M) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return false;
  CacheHeader got;
  is.read(reinterpret_cast<char*>(&got), sizeof(got));
  if (!is || std::memcmp(&got, &expect, sizeof(got)) != 0) return false;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R(
      static_cast<Eigen::Index>(got.rows), static_cast<Eigen::Index>(got.cols));
  is.read(reinterpret_cast<char*>(R.data()), static_cast<std::streamsize>(R.size() * 8));
  if (!is) return false;
  M = R;
  return true;
}

CollisionTables load_or_assemble(const VelocityGrid& grid, double kappa, double b0,
                                 const std::string& cache_dir, const AssemblyOptions& opt) {
  if (cache_dir.empty()) return assemble_K(grid, kappa, b0, opt);
  namespace fs = std::filesystem;
  fs::create_directories(cache_dir);
  const int n = grid.size();
  const Matrix shape(0, 0);
  CacheHeader hk = cache_header(grid, kappa, b0, 0.0, shape);
  hk.rows = hk.cols = n;
  const std::string pk = (fs::path(cache_dir) / cache_name(grid, kappa, b0, 0.0, "K")).string();
  const std::string pl = (fs::path(cache_dir) / cache_name(grid, kappa, b0, 0.0, "loss")).string();
  CollisionTables T;
  if (load_matrix(pk, hk, T.K) && load_matrix(pl, hk, T.loss)) {
    T.grid = grid;
    T.kappa = kappa;
    T.b0 = b0;
    const Vector mu = maxwellian_field(grid, 1.0);
    T.sqrt_mu = mu.cwiseSqrt();
    T.nu = T.loss * mu;
    return T;
  }
  T = assemble_K(grid, kappa, b0, opt);
  save_matrix(pk, hk, T.K);
  save_matrix(pl, hk, T.loss);
  return T;
}

}  // namespace kinlab
