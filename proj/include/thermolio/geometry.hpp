#pragma once

#include <cmath>

#include "thermolio/common.hpp"

namespace thermolio {

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

// Rodrigues formula with a second-order Taylor fallback for small angles.
inline Mat3 so3_exp(const Vec3& axis_angle) {
  const double theta2 = axis_angle.squaredNorm();
  const Mat3 w = skew(axis_angle);
  if (theta2 < 1e-16) {
    return Mat3::Identity() + w + 0.5 * w * w;
  }
  const double theta = std::sqrt(theta2);
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta2;
  return Mat3::Identity() + a * w + b * w * w;
}

inline Vec3 so3_log(const Mat3& r) {
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (theta < 1e-8) {
    return 0.5 * (1.0 + theta * theta / 6.0) * w;
  }
  if (theta > kPi - 1e-6) {
    // Near pi the antisymmetric part vanishes; recover the axis from the
    // symmetric part R ~ 2*a*a^T - I and fix its sign with w.
    const Mat3 s = 0.5 * (r + Mat3::Identity());
    int k = 0;
    s.diagonal().maxCoeff(&k);
    Vec3 axis;
    axis[k] = std::sqrt(std::max(s(k, k), 0.0));
    for (int i = 0; i < 3; ++i) {
      if (i != k) axis[i] = s(k, i) / axis[k];
    }
    axis.normalize();
    if (axis.dot(w) < 0.0) axis = -axis;
    return theta * axis;
  }
  return (theta / (2.0 * std::sin(theta))) * w;
}

// Right Jacobian of SO(3): Exp(u + d) ~ Exp(u) Exp(Jr(u) d).
inline Mat3 so3_right_jacobian(const Vec3& u) {
  const double theta2 = u.squaredNorm();
  const Mat3 w = skew(u);
  if (theta2 < 1e-16) {
    return Mat3::Identity() - 0.5 * w + (1.0 / 6.0) * w * w;
  }
  const double theta = std::sqrt(theta2);
  const double a = (1.0 - std::cos(theta)) / theta2;
  const double b = (theta - std::sin(theta)) / (theta2 * theta);
  return Mat3::Identity() - a * w + b * w * w;
}

// Rigid transform: rotation plus translation, composing like a 4x4 matrix.
struct SE3 {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  SE3() = default;
  SE3(const Mat3& r, const Vec3& tr) : R(r), t(tr) {}

  static SE3 identity() { return SE3(); }

  Vec3 operator*(const Vec3& p) const { return R * p + t; }

  SE3 operator*(const SE3& other) const { return SE3(R * other.R, R * other.t + t); }

  SE3 inverse() const {
    Mat3 rt = R.transpose();
    return SE3(rt, -(rt * t));
  }
};

// Exp of a 6-vector [dtheta; dt]: the rotation block is the SO(3) exponential
// and the translation slot takes dt directly (the retraction the extrinsic
// solver iterates with, not the twist exponential).
inline SE3 se3_exp(const Vec6& delta) {
  return SE3(so3_exp(delta.head<3>()), delta.tail<3>());
}

// Orthonormal basis N(omega) of the tangent plane at a unit direction.
// Seeds Gram-Schmidt with the standard basis vector least aligned with omega.
inline Mat32 tangent_basis(const Vec3& omega) {
  int k = 0;
  omega.cwiseAbs().minCoeff(&k);
  Vec3 e = Vec3::Zero();
  e[k] = 1.0;
  const Vec3 n1 = (e - e.dot(omega) * omega).normalized();
  const Vec3 n2 = omega.cross(n1);
  Mat32 n;
  n.col(0) = n1;
  n.col(1) = n2;
  return n;
}

// S^2 perturbation: rotate omega about an axis in its tangent plane, so the
// result stays a unit vector.
inline Vec3 boxplus_s2(const Vec3& omega, const Vec2& delta) {
  if (std::abs(omega.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("boxplus_s2: direction is not unit length");
  }
  return so3_exp(tangent_basis(omega) * delta) * omega;
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  return (r.transpose() * r - Mat3::Identity()).norm() < tol &&
         std::abs(r.determinant() - 1.0) < tol;
}

// Re-project a near-rotation onto SO(3) (polar decomposition via SVD).
inline Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 d = Mat3::Identity();
    d(2, 2) = -1.0;
    r = svd.matrixU() * d * svd.matrixV().transpose();
  }
  return r;
}

}  // namespace thermolio
