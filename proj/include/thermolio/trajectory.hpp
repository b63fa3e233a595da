#pragma once

#include <algorithm>
#include <vector>

#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"

namespace thermolio {

// One LiDAR return: unit direction and depth in the sensor frame at its own
// acquisition time.
struct TimedLidarPoint {
  Vec3 direction;
  double depth = 0.0;
  double time = 0.0;

  Vec3 position() const { return depth * direction; }
};

// Time-ordered pose samples with geodesic interpolation on the rotation.
class PoseTrajectory {
 public:
  void push(double t, const SE3& pose) {
    if (!times_.empty() && t <= times_.back()) {
      throw ValidationError("PoseTrajectory: timestamps must be strictly increasing");
    }
    times_.push_back(t);
    poses_.push_back(pose);
  }

  bool empty() const { return times_.empty(); }
  std::size_t size() const { return times_.size(); }
  double t_min() const { return times_.front(); }
  double t_max() const { return times_.back(); }

  bool covers(double t0, double t1, double tol = 1e-9) const {
    return !times_.empty() && t0 >= times_.front() - tol && t1 <= times_.back() + tol;
  }

  SE3 sample(double t) const {
    if (times_.empty()) throw RangeError("PoseTrajectory: empty");
    const double tol = 1e-9;
    if (t < times_.front() - tol || t > times_.back() + tol) {
      throw RangeError("PoseTrajectory: time " + std::to_string(t) +
                       " outside span [" + std::to_string(times_.front()) + ", " +
                       std::to_string(times_.back()) + "]");
    }
    if (times_.size() == 1) return poses_.front();
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t i1 = std::min<std::size_t>(it - times_.begin(), times_.size() - 1);
    if (i1 == 0) i1 = 1;
    const std::size_t i0 = i1 - 1;
    const double span = times_[i1] - times_[i0];
    const double alpha = std::clamp((t - times_[i0]) / span, 0.0, 1.0);
    const SE3& a = poses_[i0];
    const SE3& b = poses_[i1];
    return SE3(a.R * so3_exp(alpha * so3_log(a.R.transpose() * b.R)),
               (1.0 - alpha) * a.t + alpha * b.t);
  }

  // Drop samples older than t_keep, keeping one sample at or before it.
  void trim_before(double t_keep) {
    if (times_.size() < 2) return;
    std::size_t first = 0;
    while (first + 1 < times_.size() && times_[first + 1] <= t_keep) ++first;
    if (first > 0) {
      times_.erase(times_.begin(), times_.begin() + first);
      poses_.erase(poses_.begin(), poses_.begin() + first);
    }
  }

 private:
  std::vector<double> times_;
  std::vector<SE3> poses_;
};

// Motion compensation: transform each point by the interpolated sensor pose at
// its own timestamp, expressed in the sensor frame at scan end. The trajectory
// holds the poses of the LiDAR frame itself.
inline std::vector<Vec3> deskew_scan(const std::vector<TimedLidarPoint>& scan,
                                     const PoseTrajectory& trajectory,
                                     double scan_end_time) {
  std::vector<Vec3> out;
  out.reserve(scan.size());
  if (scan.empty()) return out;
  double t0 = scan.front().time, t1 = scan.front().time;
  for (const auto& pt : scan) {
    t0 = std::min(t0, pt.time);
    t1 = std::max(t1, pt.time);
  }
  if (!trajectory.covers(std::min(t0, scan_end_time), std::max(t1, scan_end_time))) {
    throw RangeError("deskew_scan: trajectory does not cover the scan interval");
  }
  const SE3 end_inv = trajectory.sample(scan_end_time).inverse();
  for (const auto& pt : scan) {
    out.push_back(end_inv * (trajectory.sample(pt.time) * pt.position()));
  }
  return out;
}

inline std::vector<Vec3> deskew_scan(const std::vector<TimedLidarPoint>& scan,
                                     const PoseTrajectory& trajectory) {
  double t_end = scan.empty() ? 0.0 : scan.front().time;
  for (const auto& pt : scan) t_end = std::max(t_end, pt.time);
  return deskew_scan(scan, trajectory, t_end);
}

// Chained rigid registration of Eq.-16 form: world = T_GI * T_IL * p_lidar.
inline std::vector<Vec3> register_to_global(const std::vector<Vec3>& points_lidar,
                                            const SE3& t_imu_lidar, const SE3& t_world_imu) {
  const SE3 chain = t_world_imu * t_imu_lidar;
  std::vector<Vec3> out;
  out.reserve(points_lidar.size());
  for (const Vec3& p : points_lidar) out.push_back(chain * p);
  return out;
}

}  // namespace thermolio
