#pragma once

#include <memory>
#include <string>
#include <vector>

#include "kinlab/common.hpp"
#include "kinlab/lattice_rule.hpp"
#include "kinlab/rng.hpp"
#include "kinlab/velocity.hpp"

namespace kinlab {

double bessel_i0e(double x);

// Smooth cutoff: 1 on [0, m], 0 on [2m, inf), cubic smoothstep between.
double cutoff_chi(double s, double m);

// Transverse integral of the gain kernel in Carleman form,
//   I(s, r) = 2 pi int_0^inf rho (s^2+rho^2)^{(kappa-1)/2} e^{-(rho-r)^2/2} I0e(rho r) drho,
// optionally with chi_m(sqrt(s^2+rho^2)) inside. Direct quadrature.
double transverse_integral(double s, double r, double kappa, double m = 0.0);

// Tabulated transverse integral on (log s, r) with bicubic interpolation.
class TransverseTable {
 public:
  TransverseTable(double kappa, double m = 0.0);
  double operator()(double s, double r) const;
  double kappa() const { return kappa_; }
  double cutoff() const { return m_; }

 private:
  double kappa_, m_;
  double u0_ = 0.0, du_ = 1.0, dr_ = 1.0;
  int nu_ = 0, nr_ = 0;
  std::vector<double> data_;  // log I, or the cutoff ratio I_m / I
  std::shared_ptr<const TransverseTable> full_;
  double lookup(double u, double r) const;
};

// Gain kernel k2(v, eta), symmetric in its arguments.
double gain_kernel(const Vec3& v, const Vec3& eta, double b0, const TransverseTable& table);

struct AssemblyOptions {
  LatticeRuleOptions rule{1, 2, 2.0, 0.0, {10, 10, 14, 3.0}};
  double refinement_tol = 0.05;  // max relative change of near-field entries vs a coarser rule
  bool check_refinement = true;
  bool symmetrize = true;  // split near-field corrections evenly between (i,j) and (j,i)
};

struct CollisionTables {
  VelocityGrid grid;
  double kappa = -1.0;
  double b0 = 1.0;
  Vector nu;
  Vector sqrt_mu;
  Matrix K;     // K2 - K1 with quadrature weights folded in
  Matrix loss;  // 2 pi b0 W(v_j - v_i): nu = loss mu, K1 = diag(sqrt mu) loss diag(sqrt mu)
  double m = 0.0;
  SparseMatrix Km;  // compact part, support |v - u| < 2m
  Matrix Kc;        // K - Km
  double refinement_gap = 0.0;

  Vector apply_L(const Vector& f) const { return nu.cwiseProduct(f) - K * f; }
  Matrix L() const;
  bool has_split() const { return m > 0.0; }
};

CollisionTables assemble_K(const VelocityGrid& grid, double kappa, double b0,
                           const AssemblyOptions& opt = {});

void split_cutoff(CollisionTables& tables, double m, const AssemblyOptions& opt = {});

// K^m alone, without assembling the full operator.
SparseMatrix assemble_cutoff(const VelocityGrid& grid, double kappa, double b0, double m,
                             const AssemblyOptions& opt = {});

// Orthonormal basis of the collision invariants times sqrt(mu) on the grid.
struct MacroProjection {
  Matrix basis;  // n x 5
  double weight = 1.0;

  static MacroProjection make(const VelocityGrid& grid);
  Vector coefficients(const Vector& f) const { return weight * (basis.transpose() * f); }
  Vector project(const Vector& f) const { return basis * coefficients(f); }
  Vector complement(const Vector& f) const { return f - project(f); }
  Matrix gram() const { return weight * (basis.transpose() * basis); }
};

// (I-P) L (I-P): the linearized operator with exact discrete invariants.
Matrix conservative_L(const CollisionTables& tables, const MacroProjection& proj);

// Importance-sampled (u, omega) rule for the gain term, fixed per node.
struct GainRule {
  int samples = 0;
  int n_nodes = 0;
  // per (node, sample): lattice cell base index and trilinear fractions of v' and u'
  std::vector<int> vp_base, up_base;
  std::vector<float> vp_frac, up_frac;
  std::vector<double> w_gamma;  // includes sqrt(mu(u))
  std::vector<double> w_q;      // without it
  std::vector<unsigned char> out_of_range;
  long clipped = 0;
};

GainRule make_gain_rule(const VelocityGrid& grid, double kappa, double b0, int samples,
                        std::uint64_t seed = 0x6a1e);

struct GammaParts {
  Vector plus, minus;
  Vector total() const { return plus - minus; }
};

enum class RangePolicy { ZeroExtend, Strict };

GammaParts gamma(const CollisionTables& tables, const GainRule& rule, const Vector& f,
                 const Vector& g, RangePolicy policy = RangePolicy::ZeroExtend);

// Q+(F, G) for absolute densities; nonnegative whenever F, G are.
Vector gain_absolute(const CollisionTables& tables, const GainRule& rule, const Vector& F,
                     const Vector& G);

// R(F) = int int B F(u): loss frequency against F.
Vector loss_frequency(const CollisionTables& tables, const Vector& F);

// nu_*(v) = int int B F_*(u) with F_* = mu + sqrt(mu) f_*.
Vector nu_star(const CollisionTables& tables, const Vector& F_star);

struct SandwichReport {
  double min_ratio = 0.0, max_ratio = 0.0;
  bool ok = false;
};
SandwichReport nu_star_sandwich(const Vector& nu, const Vector& nu_s);

// -Gamma(f_*, f) - Gamma(f, f_*)
Vector linearized_background(const CollisionTables& tables, const GainRule& rule,
                             const Vector& f_star, const Vector& f);

// Monte-Carlo estimate of (K f)(v) straight from the collision integral.
struct McEstimate {
  double mean = 0.0, std_error = 0.0;
};
template <class F>
McEstimate mc_apply_K(const Vec3& v, F&& f, double kappa, double b0, long samples,
                      CounterRng& rng);

// Binary cache: little-endian f64 header, then the row-major matrix.
struct CacheHeader {
  double grid_hash_hi = 0, grid_hash_lo = 0, v_max = 0, n = 0, kappa = 0, b0 = 0, m = 0;
  double rows = 0, cols = 0;
};
void save_matrix(const std::string& path, const CacheHeader& hdr, const Matrix& M);
bool load_matrix(const std::string& path, const CacheHeader& expect, Matrix& M);
CacheHeader cache_header(const VelocityGrid& grid, double kappa, double b0, double m,
                         const Matrix& M);
std::string cache_name(const VelocityGrid& grid, double kappa, double b0, double m,
                       const std::string& what);

CollisionTables load_or_assemble(const VelocityGrid& grid, double kappa, double b0,
                                 const std::string& cache_dir,
                                 const AssemblyOptions& opt = {});

// --- template implementation ---

struct CollisionSample {
  Vec3 z;       // u - v
  Vec3 omega;   // unit vector
  double w;     // |z|^kappa / proposal density, omega rule weight folded in
};
CollisionSample draw_collision(const Vec3& v, double kappa, CounterRng& rng);

template <class F>
McEstimate mc_apply_K(const Vec3& v, F&& f, double kappa, double b0, long samples,
                      CounterRng& rng) {
  auto smu = [](const Vec3& x) { return std::sqrt(maxwellian(x, 1.0)); };
  double mean = 0.0, m2 = 0.0;
  for (long s = 0; s < samples; ++s) {
    const CollisionSample c = draw_collision(v, kappa, rng);
    const Vec3 u = v + c.z;
    const double zw = c.z.dot(c.omega);
    const Vec3 vp = v + zw * c.omega;
    const Vec3 up = u - zw * c.omega;
    const double gain = smu(u) * (smu(up) * f(vp) + smu(vp) * f(up));
    const double loss = smu(v) * smu(u) * f(u);
    const double x = 2.0 * kPi * b0 * c.w * (gain - loss);
    const double d = x - mean;
    mean += d / (s + 1);
    m2 += d * (x - mean);
  }
  McEstimate e;
  e.mean = mean;
  e.std_error = samples > 1 ? std::sqrt(m2 / (samples - 1) / samples) : 0.0;
  return e;
}

}  // namespace kinlab
