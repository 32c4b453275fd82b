#include "kinlab/lattice_rule.hpp"

#include <algorithm>
#include <cmath>

namespace kinlab {

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

DuffyPoints duffy_cube(double a, const std::vector<double>& breakpoints, double max_radius,
                       const DuffyOptions& opt) {
  std::vector<double> fx, fw, rx, rw, sx, sw;
  gauss_legendre(opt.face_order, fx, fw);
  gauss_legendre(opt.radial_order, rx, rw);
  gauss_legendre(opt.singular_order, sx, sw);
  const double q = opt.singular_power;

  DuffyPoints out;
  for (int axis = 0; axis < 3; ++axis) {
    const int b = (axis + 1) % 3, c = (axis + 2) % 3;
    for (double sign : {-1.0, 1.0}) {
      for (int i = 0; i < opt.face_order; ++i) {
        for (int j = 0; j < opt.face_order; ++j) {
          Vec3 p;
          p[axis] = sign * a;
          p[b] = a * fx[i];
          p[c] = a * fx[j];
          const double plen = p.norm();
          const double face_w = a * fw[i] * a * fw[j] * a;  // ds dt |p.n|
          // ray parameter breakpoints in (0, 1]
          std::vector<double> lam;
          for (double r : breakpoints)
            if (r > 0.0 && r < plen) lam.push_back(r / plen);
          lam.push_back(1.0);
          std::sort(lam.begin(), lam.end());
          lam.erase(std::unique(lam.begin(), lam.end()), lam.end());
          const double lam_max = max_radius > 0.0 ? std::min(1.0, max_radius / plen) : 1.0;
          double lo = 0.0;
          for (std::size_t k = 0; k < lam.size(); ++k) {
            double hi = std::min(lam[k], lam_max);
            if (hi <= lo) break;
            if (k == 0) {
              // lambda = hi * u^q on u in [0,1]
              for (int m = 0; m < opt.singular_order; ++m) {
                const double u = 0.5 * (sx[m] + 1.0);
                const double l = hi * std::pow(u, q);
                const double dl = hi * q * std::pow(u, q - 1.0) * 0.5 * sw[m];
                out.z.push_back(l * p);
                out.w.push_back(face_w * l * l * dl);
              }
            } else {
              for (int m = 0; m < opt.radial_order; ++m) {
                const double l = lo + 0.5 * (hi - lo) * (rx[m] + 1.0);
                const double dl = 0.5 * (hi - lo) * rw[m];
                out.z.push_back(l * p);
                out.w.push_back(face_w * l * l * dl);
              }
            }
            lo = hi;
          }
        }
      }
    }
  }
  return out;
}

namespace {

std::vector<std::array<int, 3>> monomial_powers(int degree) {
  std::vector<std::array<int, 3>> out;
  for (int d = 0; d <= degree; ++d)
    for (int i = d; i >= 0; --i)
      for (int j = d - i; j >= 0; --j) out.push_back({i, j, d - i - j});
  return out;
}

}  // namespace

Eigen::RowVectorXd CorrectedLatticeRule::tests(const Vec3& z) const {
  const auto& powers = powers_;
  Eigen::RowVectorXd g(powers.size());
  const Vec3 s = z / h_;
  double win = 1.0;
  if (opt_.window_sigma > 0.0) {
    const double sig = opt_.window_sigma;
    win = std::exp(-0.5 * s.squaredNorm() / (sig * sig));
  }
  for (std::size_t l = 0; l < powers.size(); ++l)
    g[l] = win * std::pow(s[0], powers[l][0]) * std::pow(s[1], powers[l][1]) *
           std::pow(s[2], powers[l][2]);
  return g;
}

CorrectedLatticeRule::CorrectedLatticeRule(double h, const LatticeRuleOptions& opt)
    : h_(h), opt_(opt), powers_(monomial_powers(opt.degree)) {
  require(h > 0.0, "lattice spacing must be positive");
  const bool windowed = opt.window_sigma > 0.0;
  require(windowed || opt.support > 0.0, "compact lattice rule needs a support radius");
  std::vector<double> breaks;
  double cube, max_radius;
  if (windowed) {
    const double sig = opt.window_sigma * h;
    cube = 6.0 * sig;
    max_radius = 0.0;
    breaks.push_back(0.5 * h);
    for (double r = sig; r < cube * std::sqrt(3.0); r += sig) breaks.push_back(r);
    reach_ = cube;
  } else {
    cube = opt.support;
    max_radius = opt.support;
    breaks = {0.5 * opt.support, opt.support};
    reach_ = opt.support;
  }
  duffy_ = duffy_cube(cube, breaks, max_radius, opt.duffy);

  const int D = static_cast<int>(std::ceil(reach_ / h - 1e-12));
  for (int i = -D; i <= D; ++i)
    for (int j = -D; j <= D; ++j)
      for (int k = -D; k <= D; ++k) {
        if (i == 0 && j == 0 && k == 0) continue;
        if (!windowed && h * std::sqrt(double(i * i + j * j + k * k)) >= opt.support) continue;
        offsets_.push_back({i, j, k});
      }
  const int R = opt.stencil_radius;
  for (int i = -R; i <= R; ++i)
    for (int j = -R; j <= R; ++j)
      for (int k = -R; k <= R; ++k) stencil_.push_back({i, j, k});

  const int nt = static_cast<int>(powers_.size());
  gq_.resize(duffy_.z.size(), nt);
  for (std::size_t q = 0; q < duffy_.z.size(); ++q) gq_.row(q) = duffy_.w[q] * tests(duffy_.z[q]);
  hd_.resize(offsets_.size(), nt);
  const double h3 = h * h * h;
  for (std::size_t d = 0; d < offsets_.size(); ++d) {
    const Vec3 z(offsets_[d][0] * h, offsets_[d][1] * h, offsets_[d][2] * h);
    hd_.row(d) = h3 * tests(z);
  }
  Matrix M(nt, stencil_.size());
  for (std::size_t s = 0; s < stencil_.size(); ++s) {
    const Vec3 z(stencil_[s][0] * h, stencil_[s][1] * h, stencil_[s][2] * h);
    M.col(s) = tests(z).transpose();
  }
  // minimum-norm right inverse
  const Matrix MMt = M * M.transpose();
  pinv_ = M.transpose() * MMt.ldlt().solve(Matrix::Identity(nt, nt));
}

Vector CorrectedLatticeRule::corrections(const Vector& kernel_q, const Vector& kernel_d) const {
  const Vector exact = gq_.transpose() * kernel_q;
  const Vector point = hd_.transpose() * kernel_d;
  return pinv_ * (exact - point);
}

}  // namespace kinlab
