#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace thermolio {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using MatX = Eigen::MatrixXd;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat32 = Eigen::Matrix<double, 3, 2>;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Input or configuration that fails validation before any processing starts.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A solver failed to converge or was asked to solve an unsolvable instance.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Observations do not constrain the solution (rank-deficient normal equations,
// unidirectional edges, coplanar calibration views, ...).
struct DegenerateGeometryError : SolverError {
  using SolverError::SolverError;
};

// A value fell outside the range a model is defined on.
struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace thermolio
