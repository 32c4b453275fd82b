#pragma once

#include <string>
#include <vector>

#include "kinlab/common.hpp"
#include "kinlab/velocity.hpp"

namespace kinlab {

// Nodes x_0 = -L, ..., x_N = L of a 1D slab (walls at both ends, transverse
// directions periodic). Fields are stored velocity-major: f(v, x).
struct SlabGrid {
  double half_width = 0.5;
  int cells = 32;
  double dx = 1.0 / 32;
  Vector x;
  Vector weight;  // trapezoid weights, sum = 2L

  static SlabGrid make(double half_width, int cells);
  int nodes() const { return cells + 1; }
  double width() const { return 2.0 * half_width; }
};

// Wall bookkeeping on a velocity grid. Left wall x = -L has outward normal
// -e1 (outgoing v1 < 0); right wall x = +L has +e1 (outgoing v1 > 0).
struct SlabWalls {
  std::vector<int> pos, neg;  // v1 > 0, v1 < 0
  Vector v1;
  Vector flux;  // |v1| h^3
  Vector mu, smu;
  double Z = 1.0;  // grid value of the flux integral of mu over one half space

  static SlabWalls make(const VelocityGrid& grid);

  // sum over outgoing velocities of F |v1| h^3
  double outgoing_left(const Vector& F) const;
  double outgoing_right(const Vector& F) const;
  // mu_theta divided by its grid flux integral: emits exactly unit flux
  Vector wall_maxwellian(const VelocityGrid& grid, double theta) const;
  // P_gamma f on the incoming half of each wall (zero elsewhere)
  Vector p_gamma_left(const Vector& f_wall) const;
  Vector p_gamma_right(const Vector& f_wall) const;
};

// Binary field file: little-endian f64 header (magic, rows, cols, L, cells,
// v_max, n), then column-major values. A JSON sidecar carries diagnostics.
void save_field(const std::string& path, const Matrix& f, const SlabGrid& slab,
                const VelocityGrid& grid);
Matrix load_field(const std::string& path, SlabGrid* slab = nullptr, VelocityGrid* grid = nullptr);

}  // namespace kinlab
