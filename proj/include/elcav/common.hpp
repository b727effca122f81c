#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace elcav {

using Complex = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using CVec2 = Eigen::Vector2cd;
using Mat2 = Eigen::Matrix2d;
using CMat2 = Eigen::Matrix2cd;
using VecX = Eigen::VectorXd;
using CVecX = Eigen::VectorXcd;
using MatX = Eigen::MatrixXd;
using CMatX = Eigen::MatrixXcd;

inline constexpr Complex Iu{0.0, 1.0};

/// Bad user-supplied configuration (nonpositive constants, angle out of range, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid shape or mesh (self-intersection, inverted triangle, ...).
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numerical degeneracy that should not occur for admissible inputs.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Linear-solver failure (singular or badly conditioned system).
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace elcav
