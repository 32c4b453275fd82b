#pragma once

#include <array>

#include "kinlab/common.hpp"

namespace kinlab {

enum class Shape { Slab, Ball };

// Bounded spatial domain {xi(x) < 0}. A slab is an axis-aligned box; axes
// flagged periodic have no walls, so rays never exit through them.
struct DomainSpec {
  Shape shape = Shape::Ball;
  double radius = 1.0;
  Vec3 half_widths = Vec3::Ones();
  std::array<bool, 3> periodic{false, false, false};

  static DomainSpec ball(double radius);
  static DomainSpec box(const Vec3& half_widths);
  // Walls only at x1 = +-half_width; the other two axes are periodic.
  static DomainSpec slab(double half_width, double transverse = 1.0);

  double diameter() const;
  bool convex() const { return true; }
  double xi(const Vec3& x) const;
  // Outward unit normal at a boundary point.
  Vec3 normal(const Vec3& x) const;
  void validate() const;
};

struct ExitRecord {
  double t_b = 0.0;
  Vec3 x_b = Vec3::Zero();
  double normal_dot = 0.0;
};

constexpr double kDegenerateSpeed = 1e-14;

ExitRecord exit_time(const DomainSpec& domain, const Vec3& x, const Vec3& v);

// Backward exit along the sped-up ray (1+|v|^2)^{|kappa|/2} v.
ExitRecord speeded_exit_time(const DomainSpec& domain, const Vec3& x, const Vec3& v,
                             double kappa);

double speed_factor(const Vec3& v, double kappa);

bool is_near_grazing(const DomainSpec& domain, const Vec3& x, const Vec3& v, double eps);

}  // namespace kinlab
