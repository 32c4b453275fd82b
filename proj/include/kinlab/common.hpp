#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>

namespace kinlab {

using Vec3 = Eigen::Vector3d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

constexpr double kPi = 3.14159265358979323846;

// Base for every error the library raises on bad input or failed numerics.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error {
  using Error::Error;
};

struct ParameterError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

}  // namespace kinlab
