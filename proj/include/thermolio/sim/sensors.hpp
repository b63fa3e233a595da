#pragma once

#include <map>
#include <vector>

#include "thermolio/camera.hpp"
#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"
#include "thermolio/imu.hpp"
#include "thermolio/lidar_noise.hpp"
#include "thermolio/radiometry.hpp"
#include "thermolio/random.hpp"
#include "thermolio/raster.hpp"
#include "thermolio/sim/scene.hpp"
#include "thermolio/sim/trajectory.hpp"
#include "thermolio/trajectory.hpp"

namespace thermolio::sim {

// Ground-truth sensor suite: every quantity the pipeline calibrates has its
// true counterpart here.
struct SensorRig {
  Intrinsics intrinsics;          // thermal camera
  SE3 t_cam_lidar;                // LiDAR -> camera
  SE3 t_imu_lidar;                // LiDAR -> IMU
  LidarNoiseParams lidar_noise;
  RadiometricModel radiometric;
  ImuNoiseParams imu_noise;
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  Vec3 gravity = Vec3(0, 0, -9.81);

  double lidar_fov_x_deg = 70.4;  // azimuth span
  double lidar_fov_y_deg = 77.2;  // elevation span
  int dn_bits = 14;
  double dn_read_noise = 2.0;     // DN std per pixel
  double background_dn = 0.0;     // rays that miss the scene
};

// Camera 640x512 with an 88.5 x 73.2 degree field of view, LiDAR mounted
// x-forward / z-up next to it, band 8-14 um. Declared defaults, not measured
// values.
inline SensorRig default_rig() {
  SensorRig rig;
  rig.intrinsics.width = 640;
  rig.intrinsics.height = 512;
  rig.intrinsics.fx = 320.0 / std::tan(deg2rad(88.5 / 2.0));
  rig.intrinsics.fy = 256.0 / std::tan(deg2rad(73.2 / 2.0));
  rig.intrinsics.cx = 319.5;
  rig.intrinsics.cy = 255.5;
  rig.intrinsics.dist = {-0.25, 0.06, 0.0004, -0.0003, 0.0};

  Mat3 r_cam_lidar;
  r_cam_lidar << 0, -1, 0,
                 0, 0, -1,
                 1, 0, 0;
  rig.t_cam_lidar = SE3(r_cam_lidar, Vec3(0.012, -0.05, 0.02));
  rig.t_imu_lidar = SE3(Mat3::Identity(), Vec3(-0.03, 0.0, -0.04));

  rig.radiometric.responsivity = 180.0;  // DN per W m^-2 sr^-1
  rig.radiometric.offset = 800.0;        // DN
  rig.radiometric.band = {8e-6, 14e-6};
  rig.radiometric.t_min_k = celsius_to_kelvin(20.0);
  rig.radiometric.t_max_k = celsius_to_kelvin(55.0);
  return rig;
}

// Low-discrepancy Halton point, bases 2 and 3.
inline Vec2 halton2(std::uint64_t index) {
  auto radical_inverse = [](std::uint64_t i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % base);
      i /= base;
    }
    return r;
  };
  return Vec2(radical_inverse(index + 1, 2), radical_inverse(index + 1, 3));
}

// LiDAR-frame direction (x forward) for a point of the non-repeating pattern.
inline Vec3 lidar_direction(const SensorRig& rig, std::uint64_t pattern_index) {
  const Vec2 h = halton2(pattern_index);
  const double az = deg2rad(rig.lidar_fov_x_deg) * (h.x() - 0.5);
  const double el = deg2rad(rig.lidar_fov_y_deg) * (h.y() - 0.5);
  return Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
}

struct SimulatedScan {
  std::vector<TimedLidarPoint> measured;   // noisy, LiDAR frame at each time
  std::vector<Vec3> true_points_lidar;     // noise-free, LiDAR frame at each time
  std::vector<double> true_temperature_c;  // surface temperature at the hit
  double t_begin = 0.0;
  double t_end = 0.0;
};

// One scan: directions follow the low-discrepancy pattern (offset per scan so
// consecutive scans do not repeat), each return raycast at the platform pose
// of its own timestamp, measurements perturbed with the tangent-plane
// direction noise and additive ranging noise.
inline SimulatedScan simulate_lidar_scan(const SensorRig& rig, const SceneModel& scene,
                                         const AnalyticTrajectory& trajectory,
                                         double t0, double duration, int n_points,
                                         std::uint64_t scan_index, Rng& rng,
                                         bool with_noise = true) {
  SimulatedScan scan;
  scan.t_begin = t0;
  scan.t_end = t0 + duration;
  const Eigen::LLT<Mat2> omega_chol(rig.lidar_noise.sigma_omega);
  for (int i = 0; i < n_points; ++i) {
    const double t = t0 + duration * (n_points == 1 ? 0.0 : static_cast<double>(i) / (n_points - 1));
    const SE3 lidar_pose = trajectory.pose(t) * rig.t_imu_lidar;  // LiDAR -> world
    const Vec3 dir_lidar = lidar_direction(rig, scan_index * 131071ull + i);
    const auto hit = raycast(lidar_pose.t, lidar_pose.R * dir_lidar, scene);
    if (!hit) continue;

    TimedLidarPoint pt;
    pt.time = t;
    double depth = hit->range;
    Vec3 direction = dir_lidar;
    if (with_noise) {
      depth += rng.normal(0.0, rig.lidar_noise.sigma_d);
      const Vec2 dw = omega_chol.matrixL() * rng.normal2();
      direction = boxplus_s2(direction, dw);
    }
    pt.direction = direction;
    pt.depth = depth;
    scan.measured.push_back(pt);
    scan.true_points_lidar.push_back(hit->range * dir_lidar);
    scan.true_temperature_c.push_back(hit->temperature_c);
  }
  return scan;
}

// Render the thermal frame at a camera pose: per pixel, cast the undistorted
// ray, look up the surface temperature, run the radiometric forward model,
// add read noise and quantize to the configured bit depth. Band radiance is
// memoized per distinct patch temperature.
inline ThermalFrame render_thermal_frame(const SensorRig& rig, const SceneModel& scene,
                                         const SE3& camera_pose, double timestamp,
                                         Rng& rng, bool with_noise = true) {
  const Intrinsics& intr = rig.intrinsics;
  ThermalFrame frame(intr.width, intr.height, timestamp);
  const double dn_max = static_cast<double>((1 << rig.dn_bits) - 1);
  std::map<double, double> radiance_memo;
  auto radiance_of = [&](double temp_c) {
    const auto it = radiance_memo.find(temp_c);
    if (it != radiance_memo.end()) return it->second;
    const double value = band_radiance(celsius_to_kelvin(temp_c), rig.radiometric.band);
    radiance_memo.emplace(temp_c, value);
    return value;
  };

  for (int v = 0; v < intr.height; ++v) {
    Rng row_rng = rng.fork((static_cast<std::uint64_t>(timestamp * 1e6) << 16) ^
                           static_cast<std::uint64_t>(v));
    for (int u = 0; u < intr.width; ++u) {
      const Vec3 ray_cam = pixel_to_ray(Vec2(u, v), intr);
      const auto hit = raycast(camera_pose.t, camera_pose.R * ray_cam, scene);
      double dn = rig.background_dn;
      if (hit) {
        dn = rig.radiometric.responsivity * radiance_of(hit->temperature_c) +
             rig.radiometric.offset;
      }
      if (with_noise && rig.dn_read_noise > 0.0) {
        dn += row_rng.normal(0.0, rig.dn_read_noise);
      }
      dn = std::clamp(std::round(dn), 0.0, dn_max);
      frame.at(u, v) = static_cast<float>(dn);
    }
  }
  return frame;
}

// IMU stream over [0, duration] at the given rate. Specific force is
// R^T (a_world - g) plus bias and white noise.
inline std::vector<ImuSample> simulate_imu(const AnalyticTrajectory& trajectory,
                                           double duration, double rate_hz,
                                           const SensorRig& rig, Rng& rng,
                                           bool with_noise = true) {
  if (!(rate_hz > 0.0)) throw ValidationError("simulate_imu: rate must be positive");
  std::vector<ImuSample> samples;
  const double dt = 1.0 / rate_hz;
  const int n = static_cast<int>(std::floor(duration * rate_hz)) + 1;
  const double gyro_std = rig.imu_noise.gyro_noise_density * std::sqrt(rate_hz);
  const double accel_std = rig.imu_noise.accel_noise_density * std::sqrt(rate_hz);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    const SE3 pose = trajectory.pose(t);
    ImuSample s;
    s.t = t;
    s.angular_rate = trajectory.angular_rate_body(t) + rig.gyro_bias;
    s.specific_force =
        pose.R.transpose() * (trajectory.acceleration(t) - rig.gravity) + rig.accel_bias;
    if (with_noise) {
      s.angular_rate += rng.normal3() * gyro_std;
      s.specific_force += rng.normal3() * accel_std;
    }
    samples.push_back(s);
  }
  return samples;
}

// Blackbody calibration set: per plateau, the recorded reference temperature
// carries the thermistor tolerance while the DN comes from the true plateau
// temperature, averaged over n_frames.
inline std::vector<CalibrationPoint> simulate_blackbody_dataset(
    const RadiometricModel& truth, const std::vector<double>& temps_c,
    double dn_noise_sigma, int n_frames, double thermistor_tol_c, Rng& rng) {
  std::vector<CalibrationPoint> points;
  for (double temp_c : temps_c) {
    const double t_true = celsius_to_kelvin(temp_c);
    const double recorded =
        t_true + rng.uniform(-thermistor_tol_c, thermistor_tol_c);
    const double dn = truth.responsivity * band_radiance(t_true, truth.band) +
                      truth.offset +
                      rng.normal(0.0, dn_noise_sigma / std::sqrt(static_cast<double>(n_frames)));
    points.push_back({recorded, dn});
  }
  return points;
}

}  // namespace thermolio::sim
