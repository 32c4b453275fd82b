#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kinlab/collision.hpp"
#include "kinlab/common.hpp"
#include "kinlab/slab.hpp"
#include "kinlab/velocity.hpp"

namespace kinlab {

struct SteadyConfig {
  std::vector<double> epsilon{1e-1, 1e-2, 1e-3};  // strictly decreasing
  int n_restitution = 16;                          // boundary factor 1 - 1/n during continuation
  std::vector<double> lambda_schedule{0.0, 0.25, 0.5, 0.75, 1.0};
  double inner_tol = 1e-10;  // relative residual of every linear solve
  double outer_tol = 1e-9;   // weighted sup norm of successive outer differences
  int max_iters = 600;       // per stage (Krylov iterations) or per boundary fixed point
  int restart = 40;
  int max_outer = 30;
  bool probe_stages = true;  // measure the plain stage-map contraction
  int gain_samples = 128;
  double grazing = 1e-3;
  WeightSpec weight;

  void validate() const;
};

// Values on the incoming half of each wall: left uses v1 > 0, right v1 < 0.
// Entries outside the incoming half are ignored.
struct Inflow {
  Vector left, right;
  static Inflow zero(int n_v);
};

// Everything the slab solvers need about one velocity grid and one x grid.
struct SlabOperator {
  VelocityGrid grid;
  SlabGrid slab;
  SlabWalls walls;
  Vector nu;
  Matrix K;  // nu - L, as applied by the solvers
  MacroProjection proj;

  // conservative = true uses K = diag(nu) - (I-P) L (I-P).
  static SlabOperator make(const CollisionTables& tables, const SlabGrid& slab,
                           bool conservative = true);

  int n_v() const { return grid.size(); }
  int n_x() const { return slab.nodes(); }
};

// Exact damped transport along every ray with g linear between x nodes:
//   eps f + v1 df/dx + nu f = g, f = inflow on the incoming half of each wall.
Matrix solve_inflow(const SlabOperator& op, double eps, const Matrix& g, const Inflow& inflow);

// factor * P_gamma f on the incoming halves.
Inflow reflect(const SlabOperator& op, const Matrix& f, double factor);

struct GmresReport {
  int iterations = 0;
  double residual = 0.0;  // relative
  bool converged = false;
  std::vector<double> history;
};

// Restarted GMRES with modified Gram-Schmidt; x holds the start and the answer.
GmresReport gmres(const std::function<void(const Vector&, Vector&)>& apply, const Vector& b,
                  Vector& x, double tol, int restart, int max_iters);

struct L0Report {
  int iterations = 0;
  std::vector<double> diffs;
  double ratio = 0.0;  // geometric mean of the tail ratios
};

// Fixed point of the inflow solve with boundary factor * P_gamma f + r.
Matrix solve_L0(const SlabOperator& op, double eps, double factor, const Matrix& g,
                const Inflow& r, double tol, int max_iters, L0Report* report = nullptr);

struct StageReport {
  double lambda_from = 0.0, lambda_to = 0.0;
  double factor = 1.0;
  GmresReport solve;
  double plain_ratio = -1.0;  // measured contraction of f -> L_{from}^{-1}((to-from) K f + g)
};

// Solves eps f + v1 df/dx + nu f - lambda K f = g with boundary
// factor * P_gamma f + r for one lambda; x is the warm start.
GmresReport solve_stage(const SlabOperator& op, double eps, double lambda, double factor,
                        const Matrix& g, const Inflow& r, Matrix& f, double tol, int restart,
                        int max_iters);

// lambda continuation from 0 to 1 at the given boundary factor.
Matrix continuation_solve(const SlabOperator& op, const SteadyConfig& cfg, double eps,
                          double factor, const Matrix& g, const Inflow& r,
                          std::vector<StageReport>* stages = nullptr);

struct LinearReport {
  std::vector<double> eps;
  std::vector<StageReport> stages;
  std::vector<double> eps_diffs;  // weighted sup norm between successive eps solutions
  double eps_slope = 0.0;         // log-log slope of eps_diffs vs eps spacing
  bool extrapolation_warning = false;
  double mass_before = 0.0;  // of the smallest-eps solution, before stripping sqrt(mu)
  double mass_after = 0.0;
  double compat_g = 0.0, compat_r = 0.0;
};

// int int g sqrt(mu) and the incoming boundary flux of r sqrt(mu).
double compatibility_source(const SlabOperator& op, const Matrix& g);
double compatibility_boundary(const SlabOperator& op, const Inflow& r);

// v1 df/dx + L f = g, f = P_gamma f + r: eps schedule, Richardson to eps = 0,
// mass projection. warm (optional) skips the continuation.
Matrix solve_linear_steady(const SlabOperator& op, const SteadyConfig& cfg, const Matrix& g,
                           const Inflow& r, LinearReport* report = nullptr,
                           const std::vector<Matrix>* warm = nullptr,
                           std::vector<Matrix>* eps_solutions = nullptr);

// Boundary data of the linearized wall condition for wall temperatures
// theta_l, theta_r (discretely normalized emission).
Inflow wall_data(const SlabOperator& op, double theta_left, double theta_right);

struct SteadyResult {
  Matrix f_star;
  double delta = 0.0;
  double theta_left = 1.0, theta_right = 1.0;
  int outer_iterations = 0;
  bool converged = false;
  std::vector<double> outer_diffs;
  std::vector<double> outer_ratios;
  double contraction = 0.0;  // max ratio over the resolved part of the history
  std::vector<LinearReport> linear;
  double mass = 0.0;
  double min_F = 0.0;  // min (mu + sqrt(mu) f) / max mu
  double boundary_residual = 0.0;
  double sup_w = 0.0;
  SandwichReport sandwich;
  long clipped = 0;
};

SteadyResult solve_nonlinear_steady(const CollisionTables& tables, const SlabGrid& slab,
                                    const WallTemperature& wall, const SteadyConfig& cfg,
                                    const Matrix* initial = nullptr);

// Same, with operator and gain rule supplied (reuse across a delta scan).
SteadyResult solve_nonlinear_steady(const CollisionTables& tables, const SlabOperator& op,
                                    const GainRule& rule, const WallTemperature& wall,
                                    const SteadyConfig& cfg, const Matrix* initial = nullptr);

// (I - P) Gamma(f, f) column by column.
Matrix gamma_source(const CollisionTables& tables, const GainRule& rule,
                    const MacroProjection& proj, const Matrix& f, long* clipped = nullptr);

// Weighted sup norm over all nodes.
double weighted_sup(const Matrix& f, const Vector& w);

double field_mass(const SlabOperator& op, const Matrix& f);

void write_steady_json(const std::string& path, const SteadyResult& res, const SlabOperator& op);

}  // namespace kinlab
