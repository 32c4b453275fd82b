#include "kinlab/domain.hpp"

#include <cmath>
#include <limits>

namespace kinlab {

DomainSpec DomainSpec::ball(double radius) {
  DomainSpec d;
  d.shape = Shape::Ball;
  d.radius = radius;
  d.validate();
  return d;
}

DomainSpec DomainSpec::box(const Vec3& half_widths) {
  DomainSpec d;
  d.shape = Shape::Slab;
  d.half_widths = half_widths;
  d.validate();
  return d;
}

DomainSpec DomainSpec::slab(double half_width, double transverse) {
  DomainSpec d;
  d.shape = Shape::Slab;
  d.half_widths = Vec3(half_width, transverse, transverse);
  d.periodic = {false, true, true};
  d.validate();
  return d;
}

void DomainSpec::validate() const {
  if (shape == Shape::Ball) {
    require(std::isfinite(radius) && radius > 0.0, "ball radius must be positive");
  } else {
    for (int a = 0; a < 3; ++a)
      require(std::isfinite(half_widths[a]) && half_widths[a] > 0.0,
              "slab half-widths must be positive");
    require(!(periodic[0] && periodic[1] && periodic[2]),
            "slab needs at least one non-periodic axis");
  }
}

double DomainSpec::diameter() const {
  if (shape == Shape::Ball) return 2.0 * radius;
  return 2.0 * half_widths.norm();
}

double DomainSpec::xi(const Vec3& x) const {
  if (shape == Shape::Ball) return x.norm() - radius;
  double m = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a)
    if (!periodic[a]) m = std::max(m, std::abs(x[a]) - half_widths[a]);
  return m;
}

Vec3 DomainSpec::normal(const Vec3& x) const {
  if (shape == Shape::Ball) {
    const double r = x.norm();
    if (r == 0.0) throw DomainError("normal requested at the ball centre");
    return x / r;
  }
  int best = -1;
  double gap = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (periodic[a]) continue;
    const double g = half_widths[a] - std::abs(x[a]);
    if (g < gap) {
      gap = g;
      best = a;
    }
  }
  Vec3 n = Vec3::Zero();
  n[best] = x[best] >= 0.0 ? 1.0 : -1.0;
  return n;
}

ExitRecord exit_time(const DomainSpec& domain, const Vec3& x, const Vec3& v) {
  const double speed = v.norm();
  if (!(speed > kDegenerateSpeed)) throw DomainError("degenerate velocity in exit_time");
  const double tol = 1e-12 * domain.diameter();
  if (!(domain.xi(x) <= tol)) throw DomainError("exit_time: point outside the closed domain");

  ExitRecord rec;
  if (domain.shape == Shape::Ball) {
    const double R = domain.radius;
    const double xv = x.dot(v);
    const double disc = std::max(0.0, xv * xv + speed * speed * (R * R - x.squaredNorm()));
    // larger root of |x - t v| = R
    rec.t_b = std::max(0.0, (xv + std::sqrt(disc)) / (speed * speed));
  } else {
    double t = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      if (domain.periodic[a] || v[a] == 0.0) continue;
      const double L = domain.half_widths[a];
      const double ta = v[a] > 0.0 ? (x[a] + L) / v[a] : (x[a] - L) / v[a];
      t = std::min(t, std::max(0.0, ta));
    }
    if (!std::isfinite(t)) throw DomainError("ray never reaches a wall");
    rec.t_b = t;
  }
  rec.x_b = x - rec.t_b * v;
  rec.normal_dot = v.dot(domain.normal(rec.x_b));
  return rec;
}

double speed_factor(const Vec3& v, double kappa) {
  return std::pow(1.0 + v.squaredNorm(), 0.5 * std::abs(kappa));
}

ExitRecord speeded_exit_time(const DomainSpec& domain, const Vec3& x, const Vec3& v,
                             double kappa) {
  require(kappa > -3.0 && kappa <= 0.0, "kappa must lie in (-3, 0]");
  ExitRecord rec = exit_time(domain, x, v);
  const double s = speed_factor(v, kappa);
  rec.t_b /= s;
  rec.normal_dot *= s;
  return rec;
}

bool is_near_grazing(const DomainSpec& domain, const Vec3& x, const Vec3& v, double eps) {
  require(eps > 0.0, "grazing tolerance must be positive");
  const double speed = v.norm();
  return std::abs(v.dot(domain.normal(x))) < eps || speed >= 1.0 / eps || speed <= eps;
}

}  // namespace kinlab
