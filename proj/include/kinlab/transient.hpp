#pragma once

#include <limits>
#include <string>
#include <vector>

#include "kinlab/collision.hpp"
#include "kinlab/common.hpp"
#include "kinlab/slab.hpp"
#include "kinlab/steady.hpp"
#include "kinlab/velocity.hpp"

namespace kinlab {

// SameStep balances wall fluxes inside each step (exact discrete mass
// conservation); Lagged feeds the inflow from the previous step's outflow.
enum class BoundaryClosure { SameStep, Lagged };

struct TransientConfig {
  double dt = 0.01;
  double T = 1.0;
  int record_every = 1;
  double p = 2.0;
  WeightSpec weight;
  bool periodic = false;      // transverse-only surrogate: x wraps, no walls
  BoundaryClosure closure = BoundaryClosure::SameStep;
  bool collision_K = true;    // false: damping by nu alone
  double blowup_factor = 10.0;
  double grazing = 1e-3;

  void validate() const;
};

struct HistoryRow {
  double t = 0.0;
  double sup_w = 0.0, l2 = 0.0, lp = 0.0, mass = 0.0, min_F = 0.0;
};

struct TransientState {
  double t = 0.0;
  Matrix f;               // perturbation f, or F itself when absolute
  bool absolute = false;
  std::vector<HistoryRow> history;
  std::vector<std::string> warnings;
};

// Slab transport on the dual cells of the node grid (half cells at the walls,
// so cell widths equal the trapezoid weights) plus everything the collision
// step needs.
class TransientSystem {
 public:
  TransientSystem(const CollisionTables& tables, const GainRule& rule, const SlabGrid& slab,
                  double theta_left = 1.0, double theta_right = 1.0,
                  const std::string& cache_dir = "");

  // F_* = mu + sqrt(mu) f_* on the node grid; enables the linearized background terms.
  void set_background(const Matrix& f_star);
  bool has_background() const { return has_background_; }
  const Matrix& background() const { return f_star_; }

  const SlabOperator& op() const { return op_; }
  const CollisionTables& tables() const { return *tables_; }
  const GainRule& rule() const { return *rule_; }
  const Vector& edges() const { return edges_; }
  double theta_left() const { return theta_l_; }
  double theta_right() const { return theta_r_; }

  // exp(-dt L~) applied to every column, L~ the conservative operator.
  Matrix collide(const Matrix& f, double dt) const;

  // Exact remap of cell averages by a shift v1 dt with diffuse walls. absolute
  // selects the emission law for F instead of f. prev_flux (size 2, may be
  // null) switches to the lagged closure; flux receives this step's outflows.
  Matrix transport(const Matrix& f, double dt, bool absolute, bool periodic,
                   const Vector* prev_flux = nullptr, Vector* flux = nullptr) const;

  // Gamma(f_* + f, f_* + f) - Gamma(f_*, f_*) [- Gamma(f, f) when linear], projected.
  Matrix collision_source(const Matrix& f, bool nonlinear) const;

  const Vector& eigenvalues() const { return lam_; }

 private:
  const CollisionTables* tables_;
  const GainRule* rule_;
  SlabOperator op_;
  Vector edges_;
  double theta_l_, theta_r_;
  Vector em_pert_l_, em_pert_r_, em_abs_l_, em_abs_r_;
  Matrix f_star_, gamma_star_;
  bool has_background_ = false;
  Matrix V_;
  Vector lam_;
};

// One step of F' + v1 dF/dx + F' R(F) = Q+(F, F) per cell, after an exact
// transport step with diffuse walls: F <- e^{-R dt} F + (1 - e^{-R dt})/R Q+.
// Nonnegative whenever the input is. Warns when dt exceeds horizon.
TransientState local_existence_step(const TransientSystem& sys, const TransientState& state,
                                    double dt,
                                    double horizon = std::numeric_limits<double>::infinity());

// Time for the gain-only majorant F' + v1 dF/dx = Q+(F, F) to double the
// weighted sup norm of F0. dt_frac sets the step as a fraction of a first guess.
double measured_horizon(const TransientSystem& sys, const Matrix& F0, const WeightSpec& w,
                        double dt_frac = 0.005, double t_cap = 1e3);

struct HorizonFit {
  double C_hat = 0.0;  // horizon ~ 1 / (C_hat (1 + M0))
  std::vector<double> M0, measured, predicted;
};
HorizonFit fit_horizon(const std::vector<double>& M0, const std::vector<double>& measured);

// f' + v1 df/dx + L f = -L_{sqrt(mu) f_*} f + g (linear) or
// + Gamma(f, f) as well (nonlinear), with the diffuse wall for the perturbation.
TransientState evolve_linear(const TransientSystem& sys, const Matrix& f0, const Matrix& g,
                             const TransientConfig& cfg);
TransientState evolve_nonlinear(const TransientSystem& sys, const Matrix& f0,
                                const TransientConfig& cfg);

HistoryRow record(const TransientSystem& sys, const Matrix& f, double t, bool absolute,
                  const TransientConfig& cfg);

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history);

}  // namespace kinlab
