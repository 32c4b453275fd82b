#include "kinlab/slab.hpp"

#include <cmath>
#include <fstream>

namespace kinlab {

SlabGrid SlabGrid::make(double half_width, int cells) {
  require(half_width > 0.0, "slab half-width must be positive");
  require(cells >= 2, "slab needs at least two cells");
  SlabGrid s;
  s.half_width = half_width;
  s.cells = cells;
  s.dx = 2.0 * half_width / cells;
  s.x.resize(cells + 1);
  s.weight.setConstant(cells + 1, s.dx);
  for (int i = 0; i <= cells; ++i) s.x[i] = -half_width + i * s.dx;
  s.x[cells] = half_width;
  s.weight[0] = s.weight[cells] = 0.5 * s.dx;
  return s;
}

SlabWalls SlabWalls::make(const VelocityGrid& grid) {
  SlabWalls w;
  const int n = grid.size();
  w.v1 = grid.coords.col(0);
  w.flux = w.v1.cwiseAbs() * grid.weight();
  w.mu = maxwellian_field(grid, 1.0);
  w.smu = w.mu.cwiseSqrt();
  for (int i = 0; i < n; ++i) {
    require(w.v1[i] != 0.0, "velocity grid has nodes with v1 = 0");
    (w.v1[i] > 0.0 ? w.pos : w.neg).push_back(i);
  }
  w.Z = w.outgoing_right(w.mu);
  return w;
}

double SlabWalls::outgoing_left(const Vector& F) const {
  double s = 0.0;
  for (int i : neg) s += F[i] * flux[i];
  return s;
}

double SlabWalls::outgoing_right(const Vector& F) const {
  double s = 0.0;
  for (int i : pos) s += F[i] * flux[i];
  return s;
}

Vector SlabWalls::wall_maxwellian(const VelocityGrid& grid, double theta) const {
  const Vector m = maxwellian_field(grid, theta);
  return m / outgoing_right(m);
}

Vector SlabWalls::p_gamma_left(const Vector& f_wall) const {
  const double j = outgoing_left(smu.cwiseProduct(f_wall)) / Z;
  Vector out = Vector::Zero(f_wall.size());
  for (int i : pos) out[i] = smu[i] * j;
  return out;
}

Vector SlabWalls::p_gamma_right(const Vector& f_wall) const {
  const double j = outgoing_right(smu.cwiseProduct(f_wall)) / Z;
  Vector out = Vector::Zero(f_wall.size());
  for (int i : neg) out[i] = smu[i] * j;
  return out;
}

namespace {
constexpr double kFieldMagic = 1146310.0;  // arbitrary tag
}

void save_field(const std::string& path, const Matrix& f, const SlabGrid& slab,
                const VelocityGrid& grid) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  const double hdr[7] = {kFieldMagic, double(f.rows()), double(f.cols()), slab.half_width,
                         double(slab.cells), grid.v_max, double(grid.n)};
  os.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  os.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * 8));
  if (!os) throw Error("short write to " + path);
}

Matrix load_field(const std::string& path, SlabGrid* slab, VelocityGrid* grid) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  double hdr[7];
  is.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (!is || hdr[0] != kFieldMagic) throw Error(path + " is not a field file");
  Matrix f(static_cast<Eigen::Index>(hdr[1]), static_cast<Eigen::Index>(hdr[2]));
  is.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * 8));
  if (!is) throw Error("truncated field file " + path);
  if (slab) *slab = SlabGrid::make(hdr[3], static_cast<int>(hdr[4]));
  if (grid) *grid = VelocityGrid::make(hdr[5], static_cast<int>(hdr[6]));
  return f;
}

}  // namespace kinlab
