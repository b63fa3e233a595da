#pragma once

#include <memory>

#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"

namespace thermolio::sim {

// Twice-differentiable pose source with analytic derivatives: the IMU model
// needs the body angular rate and the world-frame linear acceleration.
class AnalyticTrajectory {
 public:
  virtual ~AnalyticTrajectory() = default;
  virtual SE3 pose(double t) const = 0;
  virtual Vec3 velocity(double t) const = 0;
  virtual Vec3 acceleration(double t) const = 0;
  virtual Vec3 angular_rate_body(double t) const = 0;
};

class StaticTrajectory final : public AnalyticTrajectory {
 public:
  explicit StaticTrajectory(const SE3& pose = SE3()) : pose_(pose) {}
  SE3 pose(double) const override { return pose_; }
  Vec3 velocity(double) const override { return Vec3::Zero(); }
  Vec3 acceleration(double) const override { return Vec3::Zero(); }
  Vec3 angular_rate_body(double) const override { return Vec3::Zero(); }

 private:
  SE3 pose_;
};

// Horizontal circle with tangent-following yaw, optional vertical bob and
// pitch sway. Attitude R = Rz(yaw) * Ry(pitch); closed-form derivatives.
class CircleTrajectory final : public AnalyticTrajectory {
 public:
  struct Params {
    Vec3 center{0, 0, 0};
    double radius = 1.0;
    double angular_rate = 0.3;    // rad/s around the circle
    double phase0 = 0.0;
    double yaw_offset = 0.0;      // added to the tangent heading
    double bob_amplitude = 0.0;   // m, vertical sinusoid
    double bob_rate = 0.0;        // rad/s
    double pitch_amplitude = 0.0; // rad
    double pitch_rate = 0.0;      // rad/s
  };

  explicit CircleTrajectory(const Params& p) : p_(p) {}

  SE3 pose(double t) const override {
    return SE3(rotation(t), position(t));
  }

  Vec3 velocity(double t) const override {
    const double a = p_.phase0 + p_.angular_rate * t;
    Vec3 v(-p_.radius * p_.angular_rate * std::sin(a),
           p_.radius * p_.angular_rate * std::cos(a), 0.0);
    if (p_.bob_amplitude != 0.0) {
      v.z() = p_.bob_amplitude * p_.bob_rate * std::cos(p_.bob_rate * t);
    }
    return v;
  }

  Vec3 acceleration(double t) const override {
    const double a = p_.phase0 + p_.angular_rate * t;
    const double w2 = p_.angular_rate * p_.angular_rate;
    Vec3 acc(-p_.radius * w2 * std::cos(a), -p_.radius * w2 * std::sin(a), 0.0);
    if (p_.bob_amplitude != 0.0) {
      acc.z() = -p_.bob_amplitude * p_.bob_rate * p_.bob_rate * std::sin(p_.bob_rate * t);
    }
    return acc;
  }

  // R = Rz(yaw) Ry(pitch): omega_body = yaw_dot * Ry^T e_z + pitch_dot * e_y.
  Vec3 angular_rate_body(double t) const override {
    const double pitch = p_.pitch_amplitude * std::sin(p_.pitch_rate * t);
    const double pitch_dot =
        p_.pitch_amplitude * p_.pitch_rate * std::cos(p_.pitch_rate * t);
    const double yaw_dot = p_.angular_rate;
    return yaw_dot * Vec3(-std::sin(pitch), 0.0, std::cos(pitch)) +
           Vec3(0.0, pitch_dot, 0.0);
  }

 private:
  Vec3 position(double t) const {
    const double a = p_.phase0 + p_.angular_rate * t;
    Vec3 pos = p_.center + Vec3(p_.radius * std::cos(a), p_.radius * std::sin(a), 0.0);
    if (p_.bob_amplitude != 0.0) {
      pos.z() += p_.bob_amplitude * std::sin(p_.bob_rate * t);
    }
    return pos;
  }

  Mat3 rotation(double t) const {
    const double yaw = p_.phase0 + p_.angular_rate * t + kPi / 2.0 + p_.yaw_offset;
    const double pitch = p_.pitch_amplitude * std::sin(p_.pitch_rate * t);
    return so3_exp(Vec3(0, 0, yaw)) * so3_exp(Vec3(0, pitch, 0));
  }

  Params p_;
};

}  // namespace thermolio::sim
