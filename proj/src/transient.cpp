#include "kinlab/transient.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "kinlab/analysis.hpp"

namespace kinlab {

void TransientConfig::validate() const {
  require(dt > 0.0, "transient.dt: must be > 0");
  require(T >= 0.0, "transient.T: must be >= 0");
  require(record_every >= 1, "transient.record_every: must be >= 1");
  require(p >= 1.0, "transient.p: must be >= 1");
  require(blowup_factor > 1.0, "transient.blowup_factor: must be > 1");
}

TransientSystem::TransientSystem(const CollisionTables& tables, const GainRule& rule,
                                 const SlabGrid& slab, double theta_left, double theta_right,
                                 const std::string& cache_dir)
    : tables_(&tables), rule_(&rule), theta_l_(theta_left), theta_r_(theta_right) {
  require(theta_left > 0.0 && theta_right > 0.0, "wall temperatures must be positive");
  op_ = SlabOperator::make(tables, slab);
  const int nx = slab.nodes();
  edges_.resize(nx + 1);
  edges_[0] = -slab.half_width;
  for (int j = 1; j < nx; ++j) edges_[j] = slab.x[j - 1] + 0.5 * slab.dx;
  edges_[nx] = slab.half_width;

  const SlabWalls& w = op_.walls;
  const Vector ml = w.wall_maxwellian(tables.grid, theta_left);
  const Vector mr = w.wall_maxwellian(tables.grid, theta_right);
  em_abs_l_ = ml;
  em_abs_r_ = mr;
  em_pert_l_ = ml.cwiseQuotient(w.smu);
  em_pert_r_ = mr.cwiseQuotient(w.smu);

  // spectral data of the conservative operator, cached because it is slow
  const Matrix Lt = conservative_L(tables, op_.proj);
  bool loaded = false;
  std::string pv, pl;
  CacheHeader hv, hl;
  if (!cache_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cache_dir);
    const int n = tables.grid.size();
    hv = cache_header(tables.grid, tables.kappa, tables.b0, 0.0, Matrix(n, n));
    hl = cache_header(tables.grid, tables.kappa, tables.b0, 0.0, Matrix(n, 1));
    pv = (fs::path(cache_dir) / cache_name(tables.grid, tables.kappa, tables.b0, 0.0, "Lt_vecs"))
             .string();
    pl = (fs::path(cache_dir) / cache_name(tables.grid, tables.kappa, tables.b0, 0.0, "Lt_vals"))
             .string();
    Matrix lm;
    if (load_matrix(pv, hv, V_) && load_matrix(pl, hl, lm)) {
      lam_ = lm.col(0);
      // the cache key covers the grid and kernel but not assembly options
      const Vector probe = Vector::LinSpaced(n, -1.0, 1.0);
      const Vector a = Lt * probe;
      const Vector b = V_ * (lam_.asDiagonal() * (V_.transpose() * probe));
      loaded = (a - b).norm() <= 1e-8 * std::max(1.0, a.norm());
    }
  }
  if (!loaded) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Lt);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of L failed");
    V_ = es.eigenvectors();
    lam_ = es.eigenvalues();
    if (!cache_dir.empty()) {
      save_matrix(pv, hv, V_);
      save_matrix(pl, hl, Matrix(lam_));
    }
  }
}

void TransientSystem::set_background(const Matrix& f_star) {
  require(f_star.rows() == op_.n_v() && f_star.cols() == op_.n_x(),
          "background field shape does not match the grids");
  f_star_ = f_star;
  gamma_star_.resize(f_star.rows(), f_star.cols());
  for (int j = 0; j < f_star.cols(); ++j) {
    const Vector c = f_star.col(j);
    gamma_star_.col(j) = gamma(*tables_, *rule_, c, c).total();
  }
  has_background_ = true;
}

Matrix TransientSystem::collide(const Matrix& f, double dt) const {
  const Vector decay = (-dt * lam_).array().exp();
  return V_ * (decay.asDiagonal() * (V_.transpose() * f));
}

namespace {

struct CellLayout {
  const Vector& edges;
  const Vector& width;
  double L, dx;
  int nx;

  int locate(double y) const {
    if (y < edges[1]) return 0;
    const int k = 1 + static_cast<int>(std::floor((y - edges[1]) / dx));
    return std::clamp(k, 1, nx - 1);
  }
};

}  // namespace

Matrix TransientSystem::transport(const Matrix& f, double dt, bool absolute, bool periodic,
                                  const Vector* prev_flux, Vector* flux) const {
  const int nv = op_.n_v(), nx = op_.n_x();
  require(f.rows() == nv && f.cols() == nx, "transport: field shape mismatch");
  const SlabWalls& w = op_.walls;
  const double L = op_.slab.half_width;
  const CellLayout cl{edges_, op_.slab.weight, L, op_.slab.dx, nx};
  const double h3 = op_.grid.weight();
  require(periodic || dt * w.v1.cwiseAbs().maxCoeff() < 2.0 * L,
          "transport: dt too large, a ray would cross the whole slab in one step");

  // prefix sums of cell masses per velocity
  Matrix P(nv, nx + 1);
  P.col(0).setZero();
  for (int j = 0; j < nx; ++j) P.col(j + 1) = P.col(j) + f.col(j) * cl.width[j];

  auto inner = [&](int i, double y) {
    const int k = cl.locate(y);
    return P(i, k) + (y - edges_[k]) * f(i, k);
  };

  // outflow masses from the old data
  Vector out = Vector::Zero(nv);
  if (!periodic) {
    for (int i = 0; i < nv; ++i) {
      const double s = w.v1[i] * dt;
      out[i] = s > 0.0 ? P(i, nx) - inner(i, L - s) : inner(i, -L - s);
    }
  }
  const Vector& a = absolute ? Vector(Vector::Ones(nv)) : w.smu;
  double j_left = 0.0, j_right = 0.0;  // outgoing flux through each wall
  for (int i : w.neg) j_left += a[i] * out[i] * h3 / dt;
  for (int i : w.pos) j_right += a[i] * out[i] * h3 / dt;
  if (flux) {
    flux->resize(2);
    (*flux)[0] = j_left;
    (*flux)[1] = j_right;
  }
  if (prev_flux) {
    j_left = (*prev_flux)[0];
    j_right = (*prev_flux)[1];
  }
  const Vector& eml = absolute ? em_abs_l_ : em_pert_l_;
  const Vector& emr = absolute ? em_abs_r_ : em_pert_r_;

  Matrix g(nv, nx);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < nv; ++i) {
    const double s = w.v1[i] * dt;
    const double total = P(i, nx);
    const double in = s > 0.0 ? eml[i] * j_left : emr[i] * j_right;
    auto M = [&](double y) {
      if (periodic) {
        const double q = std::floor((y + L) / (2.0 * L));
        return q * total + inner(i, y - 2.0 * L * q);
      }
      if (y <= -L) return (y + L) * in;
      if (y >= L) return total + (y - L) * in;
      return inner(i, y);
    };
    double lo = M(edges_[0] - s);
    for (int j = 0; j < nx; ++j) {
      const double hi = M(edges_[j + 1] - s);
      g(i, j) = (hi - lo) / cl.width[j];
      lo = hi;
    }
  }
  return g;
}

Matrix TransientSystem::collision_source(const Matrix& f, bool nonlinear) const {
  Matrix S = Matrix::Zero(f.rows(), f.cols());
  if (!has_background_ && !nonlinear) return S;
  for (int j = 0; j < f.cols(); ++j) {
    const Vector fj = f.col(j);
    if (fj.cwiseAbs().maxCoeff() == 0.0) continue;
    Vector s;
    if (has_background_) {
      const Vector a = f_star_.col(j) + fj;
      s = gamma(*tables_, *rule_, a, a).total() - gamma_star_.col(j);
      if (!nonlinear) s -= gamma(*tables_, *rule_, fj, fj).total();
    } else {
      s = gamma(*tables_, *rule_, fj, fj).total();
    }
    S.col(j) = op_.proj.complement(s);
  }
  return S;
}

HistoryRow record(const TransientSystem& sys, const Matrix& f, double t, bool absolute,
                  const TransientConfig& cfg) {
  const SlabOperator& op = sys.op();
  HistoryRow r;
  r.t = t;
  const FieldNorms n = norms(f, op.slab, op.grid, cfg.weight, cfg.p, cfg.grazing);
  r.sup_w = n.sup_w;
  r.l2 = n.l2;
  r.lp = n.lp;
  const SlabWalls& w = op.walls;
  if (absolute) {
    r.mass = f.colwise().sum().dot(op.slab.weight.transpose()) * op.grid.weight();
    r.min_F = f.minCoeff();
  } else {
    r.mass = mass(f, op.slab, op.grid);
    Matrix pert = f;
    if (sys.has_background()) pert += sys.background();
    r.min_F = (w.mu * Eigen::RowVectorXd::Ones(f.cols()) + w.smu.asDiagonal() * pert).minCoeff();
  }
  return r;
}

TransientState local_existence_step(const TransientSystem& sys, const TransientState& state,
                                    double dt, double horizon) {
  require(state.absolute, "local_existence_step works on absolute densities");
  require(dt > 0.0, "local_existence_step: dt must be positive");
  TransientState out = state;
  Matrix F = sys.transport(state.f, dt, true, false);
  const CollisionTables& T = sys.tables();
  for (int j = 0; j < F.cols(); ++j) {
    const Vector Fj = F.col(j);
    const Vector R = loss_frequency(T, Fj);
    const Vector Q = gain_absolute(T, sys.rule(), Fj, Fj);
    for (int i = 0; i < F.rows(); ++i) {
      const double x = R[i] * dt;
      const double phi = std::abs(x) > 1e-12 ? -std::expm1(-x) / R[i] : dt;
      F(i, j) = std::exp(-x) * Fj[i] + phi * Q[i];
    }
  }
  out.f = std::move(F);
  out.t = state.t + dt;
  if (dt > horizon)
    out.warnings.push_back("step " + std::to_string(dt) + " exceeds the local-existence horizon " +
                           std::to_string(horizon));
  return out;
}

double measured_horizon(const TransientSystem& sys, const Matrix& F0, const WeightSpec& ws,
                        double dt_frac, double t_cap) {
  const Vector w = weight_field(sys.op().grid, ws);
  const double M0 = weighted_sup(F0, w);
  require(M0 > 0.0 && F0.minCoeff() >= 0.0, "measured_horizon needs nonnegative nonzero data");
  auto gain = [&](const Matrix& F) {
    Matrix Q(F.rows(), F.cols());
    for (int j = 0; j < F.cols(); ++j) {
      const Vector c = F.col(j);
      Q.col(j) = gain_absolute(sys.tables(), sys.rule(), c, c);
    }
    return Q;
  };
  const double rate = weighted_sup(gain(F0), w) / M0;
  require(rate > 0.0, "measured_horizon: the gain term vanishes on the data");
  const double dt = dt_frac / rate;
  Matrix F = F0;
  double t = 0.0, prev = M0;
  while (t < t_cap) {
    F = sys.transport(F, dt, true, false);
    F += dt * gain(F);
    t += dt;
    const double m = weighted_sup(F, w);
    if (m >= 2.0 * M0) return t - dt * (m - 2.0 * M0) / std::max(m - prev, 1e-300);
    prev = m;
  }
  return std::numeric_limits<double>::infinity();
}

HorizonFit fit_horizon(const std::vector<double>& M0, const std::vector<double>& measured) {
  require(M0.size() == measured.size() && !M0.empty(), "fit_horizon: series lengths differ");
  HorizonFit h;
  h.M0 = M0;
  h.measured = measured;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < M0.size(); ++i) {
    const double a = 1.0 + M0[i];
    num += a / measured[i];
    den += a * a;
  }
  h.C_hat = num / den;
  for (double m : M0) h.predicted.push_back(1.0 / (h.C_hat * (1.0 + m)));
  return h;
}

namespace {

TransientState evolve(const TransientSystem& sys, const Matrix& f0, const Matrix* g,
                      const TransientConfig& cfg, bool nonlinear) {
  cfg.validate();
  const SlabOperator& op = sys.op();
  require(f0.rows() == op.n_v() && f0.cols() == op.n_x(), "initial field shape mismatch");
  TransientState st;
  st.f = f0;
  st.history.push_back(record(sys, st.f, 0.0, false, cfg));
  const long steps = std::lround(cfg.T / cfg.dt);
  const Vector w = weight_field(op.grid, cfg.weight);
  double running_max = st.history.back().sup_w;
  Vector flux(2), prev(2);
  bool have_prev = false;
  const bool lagged = cfg.closure == BoundaryClosure::Lagged && !cfg.periodic;
  const Vector damp = (-cfg.dt * op.nu).array().exp();
  for (long n = 1; n <= steps; ++n) {
    Matrix ft = sys.transport(st.f, cfg.dt, false, cfg.periodic,
                              lagged && have_prev ? &prev : nullptr, &flux);
    if (lagged) {
      prev = flux;
      have_prev = true;
    }
    const Matrix S = sys.collision_source(ft, nonlinear);
    st.f = cfg.collision_K ? sys.collide(ft, cfg.dt) : Matrix(damp.asDiagonal() * ft);
    st.f += cfg.dt * S;
    if (g) st.f += cfg.dt * (*g);
    st.t = n * cfg.dt;
    const double sw = weighted_sup(st.f, w);
    if (!std::isfinite(sw) || (running_max > 0.0 && sw > cfg.blowup_factor * running_max))
      throw NumericalError("transient blow-up guard: weighted sup norm " + std::to_string(sw) +
                           " at t = " + std::to_string(st.t));
    running_max = std::max(running_max, sw);
    if (n % cfg.record_every == 0 || n == steps)
      st.history.push_back(record(sys, st.f, st.t, false, cfg));
  }
  return st;
}

}  // namespace

TransientState evolve_linear(const TransientSystem& sys, const Matrix& f0, const Matrix& g,
                             const TransientConfig& cfg) {
  if (g.size() == 0) return evolve(sys, f0, nullptr, cfg, false);
  require(g.rows() == f0.rows() && g.cols() == f0.cols(), "source shape mismatch");
  return evolve(sys, f0, &g, cfg, false);
}

TransientState evolve_nonlinear(const TransientSystem& sys, const Matrix& f0,
                                const TransientConfig& cfg) {
  return evolve(sys, f0, nullptr, cfg, true);
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << "t,sup_w_norm,l2_norm,lp_norm,mass,min_F\n";
  os << std::setprecision(17);
  for (const auto& r : history)
    os << r.t << ',' << r.sup_w << ',' << r.l2 << ',' << r.lp << ',' << r.mass << ',' << r.min_F
       << '\n';
}

}  // namespace kinlab
