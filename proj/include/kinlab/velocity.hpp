#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kinlab/common.hpp"
#include "kinlab/domain.hpp"
#include "kinlab/lattice_rule.hpp"
#include "kinlab/rng.hpp"

namespace kinlab {

// Midpoint lattice on [-v_max, v_max]^3. With an even count per axis the
// origin is not a node.
struct VelocityGrid {
  double v_max = 6.0;
  int n = 32;
  double h = 0.375;
  Eigen::Matrix<double, Eigen::Dynamic, 3> coords;

  static VelocityGrid make(double v_max, int n_per_axis);

  int size() const { return n * n * n; }
  double weight() const { return h * h * h; }
  double total_measure() const { return size() * weight(); }
  double axis_value(int i) const { return -v_max + (i + 0.5) * h; }
  int index(int i, int j, int k) const { return (i * n + j) * n + k; }
  Vec3 node(int idx) const { return coords.row(idx).transpose(); }
  std::uint64_t hash() const;
};

// w(v) = (1+|v|^2)^{beta/2} exp(varpi |v|^zeta)
struct WeightSpec {
  double beta = 0.0;
  double varpi = 0.0;
  double zeta = 2.0;

  // Rejects pairs outside {zeta=2, 0<varpi<1/8} U {0<zeta<2, varpi>0} and
  // beta <= beta_min.
  static WeightSpec make(double beta, double varpi, double zeta, double beta_min = 0.0);
  double operator()(const Vec3& v) const;
};

std::string weight_admissibility_error(double beta, double varpi, double zeta,
                                       double beta_min);

double maxwellian(const Vec3& v, double theta);
double weight(const WeightSpec& spec, const Vec3& v);

Vector maxwellian_field(const VelocityGrid& grid, double theta);
Vector sqrt_maxwellian_field(const VelocityGrid& grid);
Vector weight_field(const VelocityGrid& grid, const WeightSpec& spec);

// Grid quadrature of the outgoing flux integral of mu_theta across a plane with normal n.
// For a coordinate normal the midpoint rule sees the kink of (v.n)^+ at the cell
// face v.n = 0 and overshoots by h^2/24 times the plane density; that endpoint
// term is subtracted (Euler-Maclaurin), leaving an O(h^4) rule.
double flux_normalization(const VelocityGrid& grid, double theta, const Vec3& n);

// Exact draw from mu_theta(v) (v.n) on {v.n > 0}.
Vec3 sample_flux_velocity(CounterRng& rng, double theta, const Vec3& n);

// Orthonormal pair spanning the plane orthogonal to n.
void tangent_frame(const Vec3& n, Vec3& t1, Vec3& t2);

// Singular weights W(d) for the kernel |z|^kappa on the lattice of spacing h:
// point values off the origin plus fitted corrections on the stencil.
struct PowerLawWeights {
  double h = 0.0;
  double kappa = 0.0;
  int reach = 0;           // |d|_inf beyond which W(d) = |d h|^kappa h^3
  std::vector<double> near;  // W on |d|_inf <= reach, (2 reach + 1)^3 entries

  double operator()(int i, int j, int k) const;
};

PowerLawWeights power_law_weights(double h, double kappa, const LatticeRuleOptions& opt = {});

struct FrequencyOptions {
  LatticeRuleOptions rule;
  double refinement_tol = 1e-3;  // relative gap against a coarser rule
};

// nu(v) = int int |v-u|^kappa b0 |cos phi| mu(u) domega du on the grid nodes.
Vector collision_frequency(const VelocityGrid& grid, double kappa, double b0,
                           const FrequencyOptions& opt = {});

// Same quadrature on a lattice of spacing h centred at an arbitrary v.
double collision_frequency_at(const Vec3& v, double h, double kappa, double b0,
                              const LatticeRuleOptions& opt = {});

void write_frequency_csv(const std::string& path, const VelocityGrid& grid, const Vector& nu);

enum class WallProfile { Constant, AxisLinear, Harmonic };

// theta(x) = 1 + delta * g(x) with |g| <= 1 on the boundary.
struct WallTemperature {
  WallProfile profile = WallProfile::Constant;
  double delta = 0.0;
  int axis = 0;
  double extent = 1.0;

  double theta(const Vec3& x) const;
  double realized_delta(const std::vector<Vec3>& boundary_points) const;
  void validate() const;
};

}  // namespace kinlab
