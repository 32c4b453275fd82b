#include "kinlab/cycles.hpp"

#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

namespace kinlab {

namespace {

ExitRecord back_exit(const DomainSpec& d, const Vec3& x, const Vec3& v, const CycleOptions& opt) {
  return opt.speeded ? speeded_exit_time(d, x, v, opt.kappa) : exit_time(d, x, v);
}

// Outgoing flux draw at a wall point, resampling draws too close to grazing.
Vec3 draw_outgoing(const DomainSpec& d, const WallTemperature& wall, const Vec3& x,
                   const CycleOptions& opt, CounterRng& rng) {
  const Vec3 n = d.normal(x);
  const double theta = wall.theta(x);
  for (int r = 0; r < opt.max_resample; ++r) {
    const Vec3 v = sample_flux_velocity(rng, theta, n);
    if (v.dot(n) >= opt.grazing_tol) return v;
  }
  throw NumericalError("grazing resample limit reached at a wall point");
}

}  // namespace

CycleSample sample_cycle(const DomainSpec& domain, const WallTemperature& wall, double t,
                         const Vec3& x, const Vec3& v, const CycleOptions& opt, CounterRng& rng) {
  require(opt.k_max >= 0, "bounce cap must be nonnegative");
  require(t > opt.time_floor, "start time must exceed the time floor");
  if (domain.xi(x) > -1e-12 * domain.diameter() &&
      std::abs(v.dot(domain.normal(x))) < opt.grazing_tol)
    throw DomainError("grazing start on the boundary");
  CycleSample c;
  c.t0 = t;
  c.x0 = x;
  c.v0 = v;
  double tk = t;
  Vec3 xk = x, vk = v;
  c.terminated = CycleEnd::BounceCap;
  while (true) {
    const ExitRecord e = back_exit(domain, xk, vk, opt);
    const double tn = tk - e.t_b;
    c.final_time = tn;
    if (tn <= opt.time_floor) {
      c.terminated = CycleEnd::TimeFloor;
      break;
    }
    if (static_cast<int>(c.bounces.size()) >= opt.k_max) break;
    Bounce b;
    b.t = tn;
    b.x = e.x_b;
    b.v = draw_outgoing(domain, wall, e.x_b, opt, rng);
    c.bounces.push_back(b);
    tk = b.t;
    xk = b.x;
    vk = b.v;
  }
  return c;
}

std::string cycle_invariant_error(const DomainSpec& domain, const CycleSample& c,
                                  const CycleOptions& opt) {
  std::ostringstream os;
  double tp = c.t0;
  Vec3 xp = c.x0, vp = c.v0;
  const double tol = 1e-9 * domain.diameter();
  for (std::size_t k = 0; k < c.bounces.size(); ++k) {
    const Bounce& b = c.bounces[k];
    if (!(b.t < tp)) os << "bounce " << k << ": time not decreasing; ";
    if (std::abs(domain.xi(b.x)) > tol) os << "bounce " << k << ": off the boundary; ";
    if (!(b.v.dot(domain.normal(b.x)) > 0.0)) os << "bounce " << k << ": draw not outgoing; ";
    const ExitRecord e = back_exit(domain, xp, vp, opt);
    if ((e.x_b - b.x).norm() > tol || std::abs(tp - e.t_b - b.t) > 1e-12 * std::max(1.0, tp))
      os << "bounce " << k << ": segment inconsistent; ";
    tp = b.t;
    xp = b.x;
    vp = b.v;
  }
  return os.str();
}

Vec3 diffuse_reflect(const DomainSpec& domain, const Vec3& x, double theta, CounterRng& rng) {
  return sample_flux_velocity(rng, theta, -domain.normal(x));
}

void Welford::add(double x) {
  ++n;
  const double d = x - mean;
  mean += d / n;
  m2 += d * (x - mean);
}

void Welford::merge(const Welford& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const long N = n + o.n;
  const double d = o.mean - mean;
  mean += d * o.n / N;
  m2 += o.m2 + d * d * (static_cast<double>(n) * o.n / N);
  n = N;
}

void check_cycle_weight(double eta, double zeta) {
  const bool ok = (zeta == 2.0 && eta >= 0.0 && eta < 0.5) ||
                  (zeta >= 0.0 && zeta < 2.0 && eta >= 0.0);
  if (!ok)
    throw ParameterError("cycle weight (eta, zeta) outside {zeta=2, 0<=eta<1/2} U {0<=zeta<2, eta>=0}");
}

CycleMeasureResult cycle_measure_estimate(const DomainSpec& domain, const WallTemperature& wall,
                                          const CycleMeasureConfig& cfg, std::uint64_t seed) {
  check_cycle_weight(cfg.eta, cfg.zeta);
  require(cfg.k >= 1 && cfg.T0 > 0.0 && cfg.n_samples > 0, "k, T0 and sample count must be positive");
  CycleOptions opt;
  opt.k_max = cfg.k - 1;
  opt.time_floor = -std::numeric_limits<double>::infinity();
  opt.speeded = cfg.speeded;
  opt.kappa = cfg.kappa;
  const int shards = std::max(1, cfg.shards);
  std::vector<Welford> est(shards), wts(shards);
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < shards; ++s) {
    for (long i = s; i < cfg.n_samples; i += shards) {
      // stream keyed by sample index: shared across k, so sweeps in k are coupled
      CounterRng rng(seed, static_cast<std::uint64_t>(i), "cycle");
      const CycleSample c = sample_cycle(domain, wall, cfg.T0, cfg.x0, cfg.v0, opt, rng);
      double w = 1.0;
      for (const Bounce& b : c.bounces) w *= std::exp(cfg.eta * std::pow(b.v.norm(), cfg.zeta));
      // t_k is the time at the end of the k-th segment
      const bool alive = static_cast<int>(c.bounces.size()) == cfg.k - 1 && c.final_time > 0.0;
      est[s].add(alive ? w : 0.0);
      wts[s].add(w);
    }
  }
  Welford E, W;
  for (int s = 0; s < shards; ++s) {
    E.merge(est[s]);
    W.merge(wts[s]);
  }
  CycleMeasureResult r;
  r.estimate = E.mean;
  r.std_error = E.std_error();
  r.mean_weight = W.mean;
  r.variance_warning = cfg.zeta == 2.0 && cfg.eta > 0.4;
  return r;
}

void write_cycle_csv(const std::string& path, const std::vector<CycleMeasureRow>& rows) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os.precision(17);
  os << "T0,k,eta,zeta,n_samples,estimate,std_error\n";
  for (const auto& r : rows)
    os << r.T0 << ',' << r.k << ',' << r.eta << ',' << r.zeta << ',' << r.n_samples << ','
       << r.estimate << ',' << r.std_error << '\n';
}

}  // namespace kinlab
