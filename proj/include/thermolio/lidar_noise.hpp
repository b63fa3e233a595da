#pragma once

#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"

namespace thermolio {

// Measurement noise of one LiDAR return: ranging noise along the beam,
// direction noise in the tangent plane of the beam direction, and the pixel
// noise of image edge coordinates.
struct LidarNoiseParams {
  double sigma_d = 0.02;                 // m, ranging std
  Mat2 sigma_omega = Mat2::Identity() *  // rad^2, tangent-plane covariance
                     (deg2rad(0.03) * deg2rad(0.03));
  double pixel_sigma = 1.5;              // px
};

// A_i = [omega  -d [omega x] N(omega)], the linearization of
// (d + dd)(omega boxplus dw) about the measurement.
inline Mat3 point_noise_lift(const Vec3& omega, double d) {
  Mat3 a;
  a.col(0) = omega;
  a.rightCols<2>() = -d * skew(omega) * tangent_basis(omega);
  return a;
}

// Closed-form 3x3 covariance of a LiDAR point: Sigma_L = A diag(sd^2, Sw) A^T.
inline Mat3 point_covariance(const Vec3& omega, double d, const LidarNoiseParams& noise) {
  if (!(d > 0.0)) throw std::invalid_argument("point_covariance: depth must be positive");
  if (std::abs(omega.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("point_covariance: direction is not unit length");
  }
  const Mat3 a = point_noise_lift(omega, d);
  Mat3 m = Mat3::Zero();
  m(0, 0) = noise.sigma_d * noise.sigma_d;
  m.bottomRightCorner<2, 2>() = noise.sigma_omega;
  const Mat3 sigma = a * m * a.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace thermolio
