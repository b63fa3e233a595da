#pragma once

#include <vector>

#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"

namespace thermolio {

struct ImuSample {
  double t = 0.0;           // s
  Vec3 angular_rate;        // rad/s, body frame
  Vec3 specific_force;      // m/s^2, body frame
};

// Full navigation state. Gravity is part of the state vector; whether it is
// estimated is decided by the error-state dimension the filter runs with.
struct NavState {
  Mat3 R = Mat3::Identity();   // body -> world
  Vec3 p = Vec3::Zero();       // m, world
  Vec3 v = Vec3::Zero();       // m/s, world
  Vec3 bg = Vec3::Zero();      // rad/s
  Vec3 ba = Vec3::Zero();      // m/s^2
  Vec3 g = Vec3(0, 0, -9.81);  // m/s^2, world
};

// Error-state layout: [dtheta, dp, dv, dbg, dba, dg], right perturbation on
// the rotation (R = R_bar * Exp(dtheta)).
inline constexpr int kErrorDimFull = 18;     // gravity estimated
inline constexpr int kErrorDimFixedG = 15;   // gravity held fixed
inline constexpr int kProcessNoiseDim = 12;  // [n_g, n_a, n_bg, n_ba]

inline NavState nav_boxplus(const NavState& x, const VecX& delta) {
  NavState out = x;
  out.R = x.R * so3_exp(delta.segment<3>(0));
  out.p += delta.segment<3>(3);
  out.v += delta.segment<3>(6);
  out.bg += delta.segment<3>(9);
  out.ba += delta.segment<3>(12);
  if (delta.size() >= kErrorDimFull) out.g += delta.segment<3>(15);
  return out;
}

inline VecX nav_boxminus(const NavState& x, const NavState& base, int dim = kErrorDimFull) {
  VecX delta(dim);
  delta.segment<3>(0) = so3_log(base.R.transpose() * x.R);
  delta.segment<3>(3) = x.p - base.p;
  delta.segment<3>(6) = x.v - base.v;
  delta.segment<3>(9) = x.bg - base.bg;
  delta.segment<3>(12) = x.ba - base.ba;
  if (dim >= kErrorDimFull) delta.segment<3>(15) = x.g - base.g;
  return delta;
}

// Discrete strapdown step: R uses the gyro increment, velocity and position
// integrate the body acceleration rotated at the step start.
inline NavState propagate_state(const NavState& x, const ImuSample& u, double dt) {
  if (!(dt > 0.0) || dt > 0.1) {
    throw std::invalid_argument("propagate_state: dt must be in (0, 0.1] s");
  }
  const Vec3 omega = u.angular_rate - x.bg;
  const Vec3 accel_world = x.R * (u.specific_force - x.ba) + x.g;
  NavState out = x;
  out.R = x.R * so3_exp(omega * dt);
  out.v = x.v + accel_world * dt;
  out.p = x.p + x.v * dt + 0.5 * accel_world * dt * dt;
  return out;
}

// Error-state transition F_x (18x18) and noise Jacobian F_w (18x12) of one
// propagate_state step, exact to first order at zero error.
inline void propagate_jacobians(const NavState& x, const ImuSample& u, double dt,
                                Eigen::Matrix<double, 18, 18>& f_x,
                                Eigen::Matrix<double, 18, 12>& f_w) {
  const Vec3 omega = u.angular_rate - x.bg;
  const Vec3 accel_body = u.specific_force - x.ba;
  const Mat3 rot_step = so3_exp(omega * dt);
  const Mat3 jr = so3_right_jacobian(omega * dt);
  const Mat3 r_skew_a = x.R * skew(accel_body);

  f_x.setIdentity();
  f_x.block<3, 3>(0, 0) = rot_step.transpose();
  f_x.block<3, 3>(0, 9) = -dt * jr;
  f_x.block<3, 3>(3, 0) = -0.5 * dt * dt * r_skew_a;
  f_x.block<3, 3>(3, 6) = dt * Mat3::Identity();
  f_x.block<3, 3>(3, 12) = -0.5 * dt * dt * x.R;
  f_x.block<3, 3>(3, 15) = 0.5 * dt * dt * Mat3::Identity();
  f_x.block<3, 3>(6, 0) = -dt * r_skew_a;
  f_x.block<3, 3>(6, 12) = -dt * x.R;
  f_x.block<3, 3>(6, 15) = dt * Mat3::Identity();

  f_w.setZero();
  f_w.block<3, 3>(0, 0) = -dt * jr;              // gyro white noise
  f_w.block<3, 3>(3, 3) = -0.5 * dt * dt * x.R;  // accel white noise
  f_w.block<3, 3>(6, 3) = -dt * x.R;
  f_w.block<3, 3>(9, 6) = Mat3::Identity();      // gyro bias random walk
  f_w.block<3, 3>(12, 9) = Mat3::Identity();     // accel bias random walk
}

// IMU noise densities; per-step process noise is assembled from these.
struct ImuNoiseParams {
  double gyro_noise_density = 1e-3;    // rad/s/sqrt(Hz)
  double accel_noise_density = 1e-2;   // m/s^2/sqrt(Hz)
  double gyro_bias_rw = 1e-5;          // rad/s/sqrt(s)
  double accel_bias_rw = 1e-4;         // m/s^2/sqrt(s)
};

// Discrete covariance of [n_g, n_a, n_bg, n_ba] for a step of length dt.
// White noise held constant over dt has variance density^2/dt; random-walk
// increments have variance rw^2*dt.
inline Eigen::Matrix<double, 12, 12> process_noise(const ImuNoiseParams& n, double dt) {
  Eigen::Matrix<double, 12, 12> q = Eigen::Matrix<double, 12, 12>::Zero();
  q.block<3, 3>(0, 0) = Mat3::Identity() * (n.gyro_noise_density * n.gyro_noise_density / dt);
  q.block<3, 3>(3, 3) = Mat3::Identity() * (n.accel_noise_density * n.accel_noise_density / dt);
  q.block<3, 3>(6, 6) = Mat3::Identity() * (n.gyro_bias_rw * n.gyro_bias_rw * dt);
  q.block<3, 3>(9, 9) = Mat3::Identity() * (n.accel_bias_rw * n.accel_bias_rw * dt);
  return q;
}

inline void require_psd(const MatX& m, const char* label, double tol = 1e-9) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, m.norm())) {
    throw ValidationError(std::string(label) + ": matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatX> eig(0.5 * (m + m.transpose()));
  if (eig.eigenvalues()(0) < -tol) {
    throw ValidationError(std::string(label) + ": matrix is not PSD");
  }
}

// One covariance step P <- F_x P F_x^T + F_w Q F_w^T on the leading P.rows()
// block of the error state (15 with fixed gravity, 18 with estimated).
inline MatX propagate_covariance(const MatX& p, const NavState& x, const ImuSample& u,
                                 double dt, const Eigen::Matrix<double, 12, 12>& q) {
  require_psd(p, "propagate_covariance: P");
  require_psd(q, "propagate_covariance: Q");
  const int dim = static_cast<int>(p.rows());
  if (dim != kErrorDimFixedG && dim != kErrorDimFull) {
    throw ValidationError("propagate_covariance: unsupported error-state dimension");
  }
  Eigen::Matrix<double, 18, 18> f_x;
  Eigen::Matrix<double, 18, 12> f_w;
  propagate_jacobians(x, u, dt, f_x, f_w);
  const MatX fx = f_x.topLeftCorner(dim, dim);
  const MatX fw = f_w.topRows(dim);
  MatX out = fx * p * fx.transpose() + fw * q * fw.transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace thermolio
