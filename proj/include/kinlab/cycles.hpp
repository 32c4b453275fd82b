#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kinlab/common.hpp"
#include "kinlab/domain.hpp"
#include "kinlab/rng.hpp"
#include "kinlab/velocity.hpp"

namespace kinlab {

struct Bounce {
  double t = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();  // outgoing velocity drawn at x
};

enum class CycleEnd { TimeFloor, BounceCap };

struct CycleSample {
  double t0 = 0.0;
  Vec3 x0 = Vec3::Zero(), v0 = Vec3::Zero();
  std::vector<Bounce> bounces;
  CycleEnd terminated = CycleEnd::TimeFloor;
  double final_time = 0.0;  // time reached by the last traced segment
};

struct CycleOptions {
  int k_max = 50;
  double time_floor = 0.0;
  bool speeded = false;
  double kappa = -1.0;
  double grazing_tol = 1e-6;
  int max_resample = 100;
};

// Back-time diffuse-reflection cycle from (t, x, v).
CycleSample sample_cycle(const DomainSpec& domain, const WallTemperature& wall, double t,
                         const Vec3& x, const Vec3& v, const CycleOptions& opt, CounterRng& rng);

// Exact check of ordering, boundary membership, outgoing draws and segment consistency.
std::string cycle_invariant_error(const DomainSpec& domain, const CycleSample& c,
                                  const CycleOptions& opt);

// Ingoing velocity from the wall emission law mu_theta |v.n| on {v.n < 0}.
Vec3 diffuse_reflect(const DomainSpec& domain, const Vec3& x, double theta, CounterRng& rng);

// Streaming mean/variance with Chan's merge for sharded estimates.
struct Welford {
  long n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x);
  void merge(const Welford& o);
  double variance() const { return n > 1 ? m2 / (n - 1) : 0.0; }
  double std_error() const { return n > 1 ? std::sqrt(variance() / n) : 0.0; }
};

struct CycleMeasureConfig {
  double T0 = 1.0;
  int k = 1;
  double eta = 0.0;
  double zeta = 2.0;
  long n_samples = 10000;
  Vec3 x0 = Vec3::Zero();
  Vec3 v0 = Vec3(1.0, 0.0, 0.0);
  bool speeded = false;
  double kappa = -1.0;
  int shards = 16;
};

struct CycleMeasureResult {
  double estimate = 0.0, std_error = 0.0;
  double mean_weight = 0.0;  // average of the product weights without the indicator
  bool variance_warning = false;
};

// MC estimate of E[ prod_{j<k} e^{eta |v_j|^zeta} 1{t_k > 0} ] over k-1 flux draws.
CycleMeasureResult cycle_measure_estimate(const DomainSpec& domain, const WallTemperature& wall,
                                          const CycleMeasureConfig& cfg, std::uint64_t seed);

void check_cycle_weight(double eta, double zeta);

struct CycleMeasureRow {
  double T0, eta, zeta;
  int k;
  long n_samples;
  double estimate, std_error;
};
void write_cycle_csv(const std::string& path, const std::vector<CycleMeasureRow>& rows);

}  // namespace kinlab
