#include <algorithm>
#include <cmath>

#include "kinlab/collision.hpp"

namespace kinlab {

namespace {

struct Locator {
  const VelocityGrid& g;
  // packed base cell, fractions, and whether every corner lies on the grid
  bool locate(const Vec3& x, int& base, float* frac) const {
    int b[3];
    bool inside = true;
    for (int a = 0; a < 3; ++a) {
      const double p = (x[a] + g.v_max) / g.h - 0.5;
      double fl = std::floor(p);
      if (fl < -1.0) fl = -1.0, inside = false;
      if (fl > g.n - 1) fl = g.n - 1, inside = false;
      b[a] = static_cast<int>(fl);
      frac[a] = static_cast<float>(std::clamp(p - fl, 0.0, 1.0));
      if (b[a] < 0 || b[a] + 1 > g.n - 1) inside = false;
    }
    base = ((b[0] + 1) * (g.n + 1) + (b[1] + 1)) * (g.n + 1) + (b[2] + 1);
    return inside;
  }

  double interp(const Vector& F, int base, const float* frac) const {
    const int m = g.n + 1;
    const int b2 = base % m - 1, b1 = (base / m) % m - 1, b0 = base / (m * m) - 1;
    double s = 0.0;
    for (int c = 0; c < 8; ++c) {
      const int i = b0 + (c >> 2), j = b1 + ((c >> 1) & 1), k = b2 + (c & 1);
      if (i < 0 || j < 0 || k < 0 || i >= g.n || j >= g.n || k >= g.n) continue;
      const double w = ((c >> 2) ? frac[0] : 1.0f - frac[0]) *
                       (((c >> 1) & 1) ? frac[1] : 1.0f - frac[1]) * ((c & 1) ? frac[2] : 1.0f - frac[2]);
      s += w * F[g.index(i, j, k)];
    }
    return s;
  }
};

}  // namespace

GainRule make_gain_rule(const VelocityGrid& grid, double kappa, double b0, int samples,
                        std::uint64_t seed) {
  require(samples > 0, "gain rule needs at least one sample per node");
  require(kappa > -3.0 && kappa < 0.0, "kappa must lie in (-3, 0)");
  GainRule R;
  R.samples = samples;
  R.n_nodes = grid.size();
  const std::size_t total = static_cast<std::size_t>(R.n_nodes) * samples;
  R.vp_base.resize(total);
  R.up_base.resize(total);
  R.vp_frac.resize(3 * total);
  R.up_frac.resize(3 * total);
  R.w_gamma.resize(total);
  R.w_q.resize(total);
  R.out_of_range.assign(total, 0);
  const Locator loc{grid};
  long clipped = 0;
#pragma omp parallel for schedule(static) reduction(+ : clipped)
  for (int i = 0; i < R.n_nodes; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i), "gain");
    const Vec3 v = grid.node(i);
    for (int s = 0; s < samples; ++s) {
      const std::size_t k = static_cast<std::size_t>(i) * samples + s;
      const CollisionSample c = draw_collision(v, kappa, rng);
      const double zw = c.z.dot(c.omega);
      const Vec3 vp = v + zw * c.omega;
      const Vec3 up = v + c.z - zw * c.omega;
      const bool in_v = loc.locate(vp, R.vp_base[k], &R.vp_frac[3 * k]);
      const bool in_u = loc.locate(up, R.up_base[k], &R.up_frac[3 * k]);
      R.out_of_range[k] = static_cast<unsigned char>((in_v ? 0 : 1) | (in_u ? 0 : 2));
      if (!in_v || !in_u) ++clipped;
      R.w_q[k] = 2.0 * kPi * b0 * c.w / samples;
      R.w_gamma[k] = R.w_q[k] * std::sqrt(maxwellian(v + c.z, 1.0));
    }
  }
  R.clipped = clipped;
  return R;
}

namespace {

Vector gain_sum(const VelocityGrid& grid, const GainRule& rule, const std::vector<double>& w,
                const Vector& f, const Vector& g) {
  require(rule.n_nodes == grid.size(), "gain rule built for a different grid");
  require(f.size() == grid.size() && g.size() == grid.size(), "field size does not match the grid");
  const Locator loc{grid};
  Vector out(grid.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rule.n_nodes; ++i) {
    double s = 0.0;
    for (int q = 0; q < rule.samples; ++q) {
      const std::size_t k = static_cast<std::size_t>(i) * rule.samples + q;
      const double a = loc.interp(f, rule.vp_base[k], &rule.vp_frac[3 * k]);
      if (a == 0.0) continue;
      s += w[k] * a * loc.interp(g, rule.up_base[k], &rule.up_frac[3 * k]);
    }
    out[i] = s;
  }
  return out;
}

}  // namespace

GammaParts gamma(const CollisionTables& tables, const GainRule& rule, const Vector& f,
                 const Vector& g, RangePolicy policy) {
  if (policy == RangePolicy::Strict && rule.clipped > 0)
    throw DomainError(std::to_string(rule.clipped) +
                      " post-collision velocities fall outside the velocity grid");
  GammaParts p;
  p.plus = gain_sum(tables.grid, rule, rule.w_gamma, f, g);
  p.minus = f.cwiseProduct(tables.loss * tables.sqrt_mu.cwiseProduct(g));
  return p;
}

Vector gain_absolute(const CollisionTables& tables, const GainRule& rule, const Vector& F,
                     const Vector& G) {
  return gain_sum(tables.grid, rule, rule.w_q, F, G);
}

}  // namespace kinlab
