#pragma once

#include <array>
#include <vector>

#include "kinlab/common.hpp"

namespace kinlab {

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

struct DuffyOptions {
  int face_order = 8;       // tensor Gauss-Legendre order per cube face
  int radial_order = 8;     // order per regular radial panel
  int singular_order = 12;  // order on the panel touching the origin
  double singular_power = 3.0;
};

// Pyramid (Duffy) point set on the cube |z|_inf <= a centred at a point
// singularity. Radial breakpoints split every ray; points beyond max_radius
// are dropped (compactly supported kernels).
struct DuffyPoints {
  std::vector<Vec3> z;
  std::vector<double> w;
};

DuffyPoints duffy_cube(double a, const std::vector<double>& breakpoints, double max_radius,
                       const DuffyOptions& opt);

// Punctured trapezoid rule on a lattice of spacing h plus a correction on the
// stencil |d|_inf <= stencil_radius. Corrections are fitted so the rule is
// exact for kernel * monomial(z/h) * window(z) up to the given degree.
struct LatticeRuleOptions {
  int stencil_radius = 1;
  int degree = 2;
  double window_sigma = 1.5;  // in units of h; <= 0 means no window (compact kernels)
  double support = 0.0;       // kernel support radius for compact kernels
  DuffyOptions duffy;
};

class CorrectedLatticeRule {
 public:
  CorrectedLatticeRule(double h, const LatticeRuleOptions& opt);

  const std::vector<Vec3>& quad_points() const { return duffy_.z; }
  const std::vector<std::array<int, 3>>& offsets() const { return offsets_; }
  const std::vector<std::array<int, 3>>& stencil() const { return stencil_; }
  double h() const { return h_; }
  double reach() const { return reach_; }

  // kernel_q: kernel at quad_points(); kernel_d: kernel at offsets()*h.
  // Returns corrections c_d on stencil() (added to the punctured point rule).
  Vector corrections(const Vector& kernel_q, const Vector& kernel_d) const;

 private:
  double h_;
  double reach_;
  LatticeRuleOptions opt_;
  DuffyPoints duffy_;
  std::vector<std::array<int, 3>> offsets_;
  std::vector<std::array<int, 3>> stencil_;
  Matrix gq_;    // quad weight * test function, (n_quad x n_test)
  Matrix hd_;    // h^3 * test function at offsets, (n_offsets x n_test)
  Matrix pinv_;  // (n_stencil x n_test)
  std::vector<std::array<int, 3>> powers_;

  Eigen::RowVectorXd tests(const Vec3& z) const;
};

}  // namespace kinlab
