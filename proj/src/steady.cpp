#include "kinlab/steady.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace kinlab {

void SteadyConfig::validate() const {
  require(!epsilon.empty(), "steady.epsilon: schedule must not be empty");
  for (std::size_t i = 0; i < epsilon.size(); ++i) {
    require(epsilon[i] > 0.0, "steady.epsilon: entries must be > 0");
    if (i > 0) require(epsilon[i] < epsilon[i - 1], "steady.epsilon: must be strictly decreasing");
  }
  require(n_restitution >= 2, "steady.n_restitution: must be >= 2");
  require(lambda_schedule.size() >= 2 && lambda_schedule.front() == 0.0 &&
              lambda_schedule.back() == 1.0,
          "steady.lambda_schedule: must run from 0 to 1");
  for (std::size_t i = 1; i < lambda_schedule.size(); ++i)
    require(lambda_schedule[i] > lambda_schedule[i - 1],
            "steady.lambda_schedule: must be strictly increasing");
  const double eps = std::numeric_limits<double>::epsilon();
  require(inner_tol > eps && outer_tol > eps, "steady tolerances must exceed machine epsilon");
  require(max_iters > 0 && restart > 0 && max_outer > 0, "steady iteration caps must be positive");
  require(gain_samples > 0, "steady.gain_samples: must be positive");
}

Inflow Inflow::zero(int n_v) { return {Vector::Zero(n_v), Vector::Zero(n_v)}; }

SlabOperator SlabOperator::make(const CollisionTables& tables, const SlabGrid& slab,
                                bool conservative) {
  SlabOperator op;
  op.grid = tables.grid;
  op.slab = slab;
  op.walls = SlabWalls::make(tables.grid);
  op.nu = tables.nu;
  op.proj = MacroProjection::make(tables.grid);
  if (conservative) {
    op.K = -conservative_L(tables, op.proj);
    op.K.diagonal() += op.nu;
  } else {
    op.K = tables.K;
  }
  return op;
}

namespace {

struct RayCoeffs {
  double E, phi0, phi1;
};

// Exact integrals of e^{-a s} and e^{-a s} s / tau over [0, tau].
RayCoeffs ray_coeffs(double a, double tau) {
  const double x = a * tau;
  RayCoeffs c;
  c.E = std::exp(-x);
  c.phi0 = -std::expm1(-x) / a;
  if (x > 1e-3) {
    c.phi1 = (c.phi0 - tau * c.E) / x;
  } else {
    c.phi1 = tau * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0);
  }
  return c;
}

Vector col_sqrt_mu(const SlabOperator& op) { return op.walls.smu; }

}  // namespace

Matrix solve_inflow(const SlabOperator& op, double eps, const Matrix& g, const Inflow& inflow) {
  const int nv = op.n_v(), nx = op.n_x();
  require(g.rows() == nv && g.cols() == nx, "solve_inflow: source has the wrong shape");
  Matrix f(nv, nx);
  const double dx = op.slab.dx;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < nv; ++i) {
    const double c = op.walls.v1[i];
    const RayCoeffs rc = ray_coeffs(eps + op.nu[i], dx / std::abs(c));
    if (c > 0.0) {
      f(i, 0) = inflow.left[i];
      for (int j = 0; j + 1 < nx; ++j)
        f(i, j + 1) = rc.E * f(i, j) + g(i, j + 1) * rc.phi0 + (g(i, j) - g(i, j + 1)) * rc.phi1;
    } else {
      f(i, nx - 1) = inflow.right[i];
      for (int j = nx - 1; j > 0; --j)
        f(i, j - 1) = rc.E * f(i, j) + g(i, j - 1) * rc.phi0 + (g(i, j) - g(i, j - 1)) * rc.phi1;
    }
  }
  return f;
}

Inflow reflect(const SlabOperator& op, const Matrix& f, double factor) {
  Inflow r;
  r.left = factor * op.walls.p_gamma_left(f.col(0));
  r.right = factor * op.walls.p_gamma_right(f.col(op.n_x() - 1));
  return r;
}

GmresReport gmres(const std::function<void(const Vector&, Vector&)>& apply, const Vector& b,
                  Vector& x, double tol, int restart, int max_iters) {
  GmresReport rep;
  const Eigen::Index n = b.size();
  if (x.size() != n) x = Vector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    rep.converged = true;
    return rep;
  }
  Matrix V(n, restart + 1);
  Matrix H = Matrix::Zero(restart + 1, restart);
  Vector cs(restart), sn(restart), s(restart + 1);
  Vector w(n);
  while (rep.iterations < max_iters) {
    apply(x, w);
    Vector r = b - w;
    double beta = r.norm();
    rep.residual = beta / bnorm;
    if (rep.history.empty()) rep.history.push_back(rep.residual);
    if (rep.residual <= tol) {
      rep.converged = true;
      return rep;
    }
    V.col(0) = r / beta;
    s.setZero();
    s[0] = beta;
    H.setZero();
    int k = 0;
    for (; k < restart && rep.iterations < max_iters; ++k) {
      apply(V.col(k), w);
      for (int i = 0; i <= k; ++i) {
        H(i, k) = V.col(i).dot(w);
        w -= H(i, k) * V.col(i);
      }
      H(k + 1, k) = w.norm();
      if (H(k + 1, k) > 0.0) V.col(k + 1) = w / H(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      const double d = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = H(k, k) / d;
      sn[k] = H(k + 1, k) / d;
      H(k, k) = d;
      H(k + 1, k) = 0.0;
      s[k + 1] = -sn[k] * s[k];
      s[k] = cs[k] * s[k];
      ++rep.iterations;
      rep.residual = std::abs(s[k + 1]) / bnorm;
      rep.history.push_back(rep.residual);
      if (rep.residual <= tol || H(k, k) == 0.0) {
        ++k;
        break;
      }
    }
    Vector y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(s.head(k));
    x += V.leftCols(k) * y;
  }
  apply(x, w);
  rep.residual = (b - w).norm() / bnorm;
  rep.converged = rep.residual <= tol;
  return rep;
}

namespace {

double sup_norm(const Matrix& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

Matrix solve_L0(const SlabOperator& op, double eps, double factor, const Matrix& g,
                const Inflow& r, double tol, int max_iters, L0Report* report) {
  const int n = op.n_v();
  Matrix f = Matrix::Zero(n, op.n_x());
  L0Report rep;
  const double limit = 1.0 - 0.5 * (1.0 - factor);  // 1 - 1/(2n) for factor 1 - 1/n
  int above = 0;
  for (int it = 0; it < max_iters; ++it) {
    Inflow in = reflect(op, f, factor);
    in.left += r.left;
    in.right += r.right;
    Matrix next = solve_inflow(op, eps, g, in);
    const double d = sup_norm(next - f);
    f.swap(next);
    rep.diffs.push_back(d);
    rep.iterations = it + 1;
    const std::size_t m = rep.diffs.size();
    if (m >= 2 && rep.diffs[m - 2] > 0.0) {
      const double q = d / rep.diffs[m - 2];
      above = (q > limit && d > tol) ? above + 1 : 0;
      if (above >= 5)
        throw NumericalError("solve_L0: boundary iteration is not contracting (ratio " +
                             std::to_string(q) + ")");
    }
    if (d < tol) break;
  }
  // geometric mean of the ratios over the resolved part of the history
  double acc = 0.0;
  int cnt = 0;
  for (std::size_t i = 1; i < rep.diffs.size(); ++i) {
    if (rep.diffs[i - 1] <= 0.0 || rep.diffs[i] < 1e3 * tol) continue;
    acc += std::log(rep.diffs[i] / rep.diffs[i - 1]);
    ++cnt;
  }
  rep.ratio = cnt ? std::exp(acc / cnt) : 0.0;
  if (report) *report = rep;
  return f;
}

GmresReport solve_stage(const SlabOperator& op, double eps, double lambda, double factor,
                        const Matrix& g, const Inflow& r, Matrix& f, double tol, int restart,
                        int max_iters) {
  const int nv = op.n_v(), nx = op.n_x();
  const Matrix b = solve_inflow(op, eps, g, r);
  Matrix zero_src = Matrix::Zero(nv, nx);
  auto apply = [&](const Vector& xin, Vector& out) {
    Eigen::Map<const Matrix> X(xin.data(), nv, nx);
    const Matrix src = lambda != 0.0 ? Matrix(lambda * (op.K * X)) : zero_src;
    const Matrix AX = solve_inflow(op, eps, src, reflect(op, X, factor));
    out.resize(xin.size());
    Eigen::Map<Matrix>(out.data(), nv, nx) = X - AX;
  };
  if (f.rows() != nv || f.cols() != nx) f = Matrix::Zero(nv, nx);
  Vector x = Eigen::Map<const Vector>(f.data(), f.size());
  const Vector bv = Eigen::Map<const Vector>(b.data(), b.size());
  GmresReport rep = gmres(apply, bv, x, tol, restart, max_iters);
  f = Eigen::Map<const Matrix>(x.data(), nv, nx);
  return rep;
}

Matrix continuation_solve(const SlabOperator& op, const SteadyConfig& cfg, double eps,
                          double factor, const Matrix& g, const Inflow& r,
                          std::vector<StageReport>* stages) {
  const auto& lam = cfg.lambda_schedule;
  Matrix f = Matrix::Zero(op.n_v(), op.n_x());
  StageReport s0;
  s0.lambda_from = s0.lambda_to = 0.0;
  s0.factor = factor;
  s0.solve = solve_stage(op, eps, 0.0, factor, g, r, f, cfg.inner_tol, cfg.restart, cfg.max_iters);
  if (!s0.solve.converged)
    throw NumericalError("continuation: the lambda = 0 solve did not converge");
  if (stages) stages->push_back(s0);
  for (std::size_t j = 1; j < lam.size(); ++j) {
    StageReport st;
    st.lambda_from = lam[j - 1];
    st.lambda_to = lam[j];
    st.factor = factor;
    const double step = lam[j] - lam[j - 1];
    if (cfg.probe_stages) {
      // two plain steps f -> L_{from}^{-1}(step K f + g) from the previous stage solution
      auto plain = [&](const Matrix& in) {
        Matrix out = in;
        const Matrix src = g + step * (op.K * in);
        const GmresReport q = solve_stage(op, eps, lam[j - 1], factor, src, r, out,
                                          cfg.inner_tol, cfg.restart, cfg.max_iters);
        if (!q.converged)
          throw NumericalError("continuation: stage solve diverged on lambda interval [" +
                               std::to_string(lam[j - 1]) + ", " + std::to_string(lam[j]) + "]");
        return out;
      };
      const Matrix f1 = plain(f);
      const Matrix f2 = plain(f1);
      const double d0 = sup_norm(f1 - f), d1 = sup_norm(f2 - f1);
      st.plain_ratio = d0 > 0.0 ? d1 / d0 : 0.0;
      f = f2;
    }
    st.solve = solve_stage(op, eps, lam[j], factor, g, r, f, cfg.inner_tol, cfg.restart,
                           cfg.max_iters);
    if (stages) stages->push_back(st);
    if (!st.solve.converged)
      throw NumericalError("continuation: stage diverged on lambda interval [" +
                           std::to_string(lam[j - 1]) + ", " + std::to_string(lam[j]) +
                           "], refine the schedule");
  }
  return f;
}

double field_mass(const SlabOperator& op, const Matrix& f) {
  const Vector per_x = f.transpose() * col_sqrt_mu(op);
  return per_x.dot(op.slab.weight) * op.grid.weight();
}

double compatibility_source(const SlabOperator& op, const Matrix& g) { return field_mass(op, g); }

double compatibility_boundary(const SlabOperator& op, const Inflow& r) {
  const SlabWalls& w = op.walls;
  double s = 0.0;
  for (int i : w.pos) s += r.left[i] * w.smu[i] * w.flux[i];
  for (int i : w.neg) s += r.right[i] * w.smu[i] * w.flux[i];
  return s;
}

double weighted_sup(const Matrix& f, const Vector& w) {
  if (f.size() == 0) return 0.0;
  return (w.asDiagonal() * f).cwiseAbs().maxCoeff();
}

Matrix solve_linear_steady(const SlabOperator& op, const SteadyConfig& cfg, const Matrix& g,
                           const Inflow& r, LinearReport* report, const std::vector<Matrix>* warm,
                           std::vector<Matrix>* eps_solutions) {
  LinearReport rep;
  const int nx = op.n_x();
  rep.compat_g = compatibility_source(op, g);
  rep.compat_r = compatibility_boundary(op, r);
  const Vector smu = col_sqrt_mu(op);
  const double g_scale =
      (g.cwiseAbs().transpose() * smu).dot(op.slab.weight) * op.grid.weight();
  double r_scale = 0.0;
  for (int i : op.walls.pos) r_scale += std::abs(r.left[i]) * smu[i] * op.walls.flux[i];
  for (int i : op.walls.neg) r_scale += std::abs(r.right[i]) * smu[i] * op.walls.flux[i];
  if (std::abs(rep.compat_g) > 1e-9 * std::max(g_scale, 1e-300) && std::abs(rep.compat_g) > 1e-14)
    throw ParameterError("solve_linear_steady: source violates compatibility (int g sqrt(mu) = " +
                         std::to_string(rep.compat_g) + ")");
  if (std::abs(rep.compat_r) > 1e-9 * std::max(r_scale, 1e-300) && std::abs(rep.compat_r) > 1e-14)
    throw ParameterError(
        "solve_linear_steady: boundary data violates compatibility (flux of r sqrt(mu) = " +
        std::to_string(rep.compat_r) + ")");

  const double factor_n = 1.0 - 1.0 / cfg.n_restitution;
  const Vector w = weight_field(op.grid, cfg.weight);
  std::vector<Matrix> sols;
  for (std::size_t k = 0; k < cfg.epsilon.size(); ++k) {
    const double eps = cfg.epsilon[k];
    rep.eps.push_back(eps);
    Matrix f;
    if (warm && k < warm->size()) {
      f = (*warm)[k];
    } else if (k > 0) {
      f = sols.back();
    } else {
      f = continuation_solve(op, cfg, eps, factor_n, g, r, &rep.stages);
    }
    StageReport fin;
    fin.lambda_from = fin.lambda_to = 1.0;
    fin.factor = 1.0;
    fin.solve = solve_stage(op, eps, 1.0, 1.0, g, r, f, cfg.inner_tol, cfg.restart, cfg.max_iters);
    rep.stages.push_back(fin);
    if (!fin.solve.converged)
      throw NumericalError("solve_linear_steady: full-boundary solve did not converge at eps = " +
                           std::to_string(eps));
    sols.push_back(f);
  }
  // The discrete mass mode sqrt(mu) is an exact null vector at eps = 0, so each
  // eps solution carries a component of size O(defect / eps) along it. Strip it
  // before comparing or extrapolating.
  const double m_unit = smu.squaredNorm() * op.grid.weight() * op.slab.weight.sum();
  auto strip = [&](const Matrix& f) {
    return Matrix(f - (field_mass(op, f) / m_unit) * smu * Eigen::RowVectorXd::Ones(nx));
  };
  std::vector<Matrix> clean;
  for (const Matrix& s : sols) clean.push_back(strip(s));
  for (std::size_t k = 1; k < clean.size(); ++k)
    rep.eps_diffs.push_back(weighted_sup(clean[k] - clean[k - 1], w));

  Matrix out;
  rep.mass_before = field_mass(op, sols.back());
  if (clean.size() >= 2) {
    const std::size_t a = clean.size() - 2, b = clean.size() - 1;
    const double e1 = cfg.epsilon[a], e2 = cfg.epsilon[b];
    out = (e1 * clean[b] - e2 * clean[a]) / (e1 - e2);
  } else {
    out = clean.back();
  }
  if (rep.eps_diffs.size() >= 2) {
    const std::size_t m = rep.eps_diffs.size();
    const double d1 = rep.eps_diffs[m - 2], d2 = rep.eps_diffs[m - 1];
    const double s1 = cfg.epsilon[m - 2] - cfg.epsilon[m - 1];
    const double s2 = cfg.epsilon[m - 1] - cfg.epsilon[m];
    if (d1 > 0.0 && d2 > 0.0) {
      rep.eps_slope = std::log(d2 / d1) / std::log(s2 / s1);
      // differences that do not shrink with the eps spacing make extrapolation meaningless
      rep.extrapolation_warning = rep.eps_slope < 0.5 && d2 > 1e3 * cfg.inner_tol;
    }
  }
  out = strip(out);
  rep.mass_after = field_mass(op, out);
  if (eps_solutions) *eps_solutions = std::move(sols);
  if (report) *report = std::move(rep);
  return out;
}

Inflow wall_data(const SlabOperator& op, double theta_left, double theta_right) {
  const SlabWalls& w = op.walls;
  const Vector m1 = w.mu / w.Z;
  Inflow r = Inflow::zero(op.n_v());
  const Vector ml = w.wall_maxwellian(op.grid, theta_left);
  const Vector mr = w.wall_maxwellian(op.grid, theta_right);
  for (int i : w.pos) r.left[i] = w.Z * (ml[i] - m1[i]) / w.smu[i];
  for (int i : w.neg) r.right[i] = w.Z * (mr[i] - m1[i]) / w.smu[i];
  return r;
}

Matrix gamma_source(const CollisionTables& tables, const GainRule& rule,
                    const MacroProjection& proj, const Matrix& f, long* clipped) {
  Matrix g(f.rows(), f.cols());
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    const Vector fj = f.col(j);
    if (fj.cwiseAbs().maxCoeff() == 0.0) {
      g.col(j).setZero();
      continue;
    }
    g.col(j) = proj.complement(gamma(tables, rule, fj, fj).total());
  }
  if (clipped) *clipped = rule.clipped;
  return g;
}

SteadyResult solve_nonlinear_steady(const CollisionTables& tables, const SlabGrid& slab,
                                    const WallTemperature& wall, const SteadyConfig& cfg,
                                    const Matrix* initial) {
  const SlabOperator op = SlabOperator::make(tables, slab);
  const GainRule rule = make_gain_rule(tables.grid, tables.kappa, tables.b0, cfg.gain_samples);
  return solve_nonlinear_steady(tables, op, rule, wall, cfg, initial);
}

SteadyResult solve_nonlinear_steady(const CollisionTables& tables, const SlabOperator& op,
                                    const GainRule& rule, const WallTemperature& wall,
                                    const SteadyConfig& cfg, const Matrix* initial) {
  cfg.validate();
  wall.validate();
  SteadyResult res;
  res.delta = wall.delta;
  const double L = op.slab.half_width;
  res.theta_left = wall.theta(Vec3(-L, 0.0, 0.0));
  res.theta_right = wall.theta(Vec3(L, 0.0, 0.0));
  const Inflow r0 = wall_data(op, res.theta_left, res.theta_right);
  const SlabWalls& sw = op.walls;
  const Vector w = weight_field(op.grid, cfg.weight);
  const int nv = op.n_v(), nx = op.n_x();

  auto boundary_data = [&](const Matrix& f) {
    const double jl = sw.outgoing_left(sw.smu.cwiseProduct(f.col(0))) / sw.Z;
    const double jr = sw.outgoing_right(sw.smu.cwiseProduct(f.col(nx - 1))) / sw.Z;
    Inflow r;
    r.left = r0.left * (1.0 + jl);
    r.right = r0.right * (1.0 + jr);
    return r;
  };

  Matrix f = initial ? *initial : Matrix::Zero(nv, nx);
  require(f.rows() == nv && f.cols() == nx, "solve_nonlinear_steady: initial field shape mismatch");
  std::vector<Matrix> warm;
  int growth = 0;
  for (int j = 0; j < cfg.max_outer; ++j) {
    const Matrix g = gamma_source(tables, rule, op.proj, f, &res.clipped);
    const Inflow r = boundary_data(f);
    LinearReport lrep;
    Matrix next = solve_linear_steady(op, cfg, g, r, &lrep, warm.empty() ? nullptr : &warm, &warm);
    res.linear.push_back(std::move(lrep));
    const double d = weighted_sup(next - f, w);
    f.swap(next);
    res.outer_diffs.push_back(d);
    res.outer_iterations = j + 1;
    const std::size_t m = res.outer_diffs.size();
    if (m >= 2) {
      const double prev = res.outer_diffs[m - 2];
      res.outer_ratios.push_back(prev > 0.0 ? d / prev : 0.0);
      growth = d > prev ? growth + 1 : 0;
      if (growth >= 3)
        throw NumericalError("solve_nonlinear_steady: outer iteration diverging (delta = " +
                             std::to_string(wall.delta) + " is too large)");
    }
    if (d < cfg.outer_tol) {
      res.converged = true;
      break;
    }
  }
  res.f_star = f;

  // contraction over the part of the history well above the tolerance floor
  res.contraction = 0.0;
  for (std::size_t i = 1; i < res.outer_diffs.size(); ++i)
    if (res.outer_diffs[i] > 10.0 * cfg.outer_tol)
      res.contraction = std::max(res.contraction, res.outer_ratios[i - 1]);
  if (res.contraction == 0.0 && !res.outer_ratios.empty() && res.outer_diffs[0] > 0.0)
    res.contraction = res.outer_ratios.front();

  res.mass = field_mass(op, f);
  res.sup_w = weighted_sup(f, w);
  const Matrix F = sw.mu * Eigen::RowVectorXd::Ones(nx) + sw.smu.asDiagonal() * f;
  res.min_F = F.minCoeff() / sw.mu.maxCoeff();

  const Inflow rb = boundary_data(f);
  const Inflow pg = reflect(op, f, 1.0);
  double bres = 0.0;
  for (int i : sw.pos)
    bres = std::max(bres, std::abs(sw.smu[i] * (f(i, 0) - pg.left[i] - rb.left[i])));
  for (int i : sw.neg)
    bres = std::max(bres, std::abs(sw.smu[i] * (f(i, nx - 1) - pg.right[i] - rb.right[i])));
  res.boundary_residual = bres;

  res.sandwich.min_ratio = std::numeric_limits<double>::infinity();
  res.sandwich.max_ratio = 0.0;
  for (int j = 0; j < nx; ++j) {
    const SandwichReport s = nu_star_sandwich(tables.nu, nu_star(tables, F.col(j)));
    res.sandwich.min_ratio = std::min(res.sandwich.min_ratio, s.min_ratio);
    res.sandwich.max_ratio = std::max(res.sandwich.max_ratio, s.max_ratio);
  }
  res.sandwich.ok = res.sandwich.min_ratio >= 0.5 && res.sandwich.max_ratio <= 1.5;
  return res;
}

void write_steady_json(const std::string& path, const SteadyResult& res, const SlabOperator& op) {
  using nlohmann::json;
  json j;
  j["delta"] = res.delta;
  j["theta_left"] = res.theta_left;
  j["theta_right"] = res.theta_right;
  j["grid_hash"] = op.grid.hash();
  j["v_max"] = op.grid.v_max;
  j["n_per_axis"] = op.grid.n;
  j["slab_half_width"] = op.slab.half_width;
  j["slab_cells"] = op.slab.cells;
  j["converged"] = res.converged;
  j["outer_iterations"] = res.outer_iterations;
  j["outer_diffs"] = res.outer_diffs;
  j["outer_ratios"] = res.outer_ratios;
  j["contraction"] = res.contraction;
  j["mass"] = res.mass;
  j["min_F"] = res.min_F;
  j["boundary_residual"] = res.boundary_residual;
  j["sup_w"] = res.sup_w;
  j["nu_star_ratio"] = {res.sandwich.min_ratio, res.sandwich.max_ratio};
  j["gain_clipped_samples"] = res.clipped;
  json lin = json::array();
  for (const auto& l : res.linear) {
    json e;
    e["eps"] = l.eps;
    e["eps_diffs"] = l.eps_diffs;
    e["eps_slope"] = l.eps_slope;
    e["extrapolation_warning"] = l.extrapolation_warning;
    e["mass_before_projection"] = l.mass_before;
    json st = json::array();
    for (const auto& s : l.stages)
      st.push_back({{"lambda", {s.lambda_from, s.lambda_to}},
                    {"factor", s.factor},
                    {"iterations", s.solve.iterations},
                    {"residual", s.solve.residual},
                    {"converged", s.solve.converged},
                    {"plain_ratio", s.plain_ratio},
                    {"history", s.solve.history}});
    e["stages"] = st;
    lin.push_back(e);
  }
  j["linear_solves"] = lin;
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << j.dump(2) << "\n";
}

}  // namespace kinlab
