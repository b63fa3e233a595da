#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"
#include "thermolio/imu.hpp"
#include "thermolio/kdtree.hpp"
#include "thermolio/trajectory.hpp"

namespace thermolio {

struct LioParams {
  int plane_knn = 5;
  double plane_fit_rms_max = 0.05;   // m, plane validity gate
  double meas_sigma = 0.02;          // m, point-to-plane measurement std
  int max_update_iters = 5;
  double update_step_tol = 1e-6;
  double map_voxel = 0.1;            // m, map downsample
  int map_rebuild_every = 10;        // scans between k-d tree rebuilds
  int max_update_points = 2000;      // scan points used per update
  double min_match_ratio = 0.2;
  bool estimate_gravity = false;

  int error_dim() const { return estimate_gravity ? kErrorDimFull : kErrorDimFixedG; }
};

// Global map: voxel-deduplicated points with a k-d tree rebuilt on a scan
// cadence. Queries run against the last built tree.
class VoxelMap {
 public:
  explicit VoxelMap(double voxel = 0.1, int rebuild_every = 10)
      : voxel_(voxel), rebuild_every_(rebuild_every) {}

  void insert_scan(const std::vector<Vec3>& points_world) {
    for (const Vec3& p : points_world) {
      const std::int64_t key = voxel_key(p);
      if (occupied_.insert(key).second) points_.push_back(p);
    }
    ++scans_since_rebuild_;
    if (tree_.size() == 0 || scans_since_rebuild_ >= rebuild_every_) rebuild();
  }

  void rebuild() {
    tree_ = KdTree3(points_);
    scans_since_rebuild_ = 0;
  }

  const KdTree3& tree() const { return tree_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

 private:
  std::int64_t voxel_key(const Vec3& p) const {
    const auto q = [&](double x) {
      return static_cast<std::int64_t>(std::floor(x / voxel_));
    };
    const std::int64_t bias = 1 << 20;
    return ((q(p.x()) + bias) << 42) | ((q(p.y()) + bias) << 21) | (q(p.z()) + bias);
  }

  double voxel_;
  int rebuild_every_;
  std::vector<Vec3> points_;
  std::unordered_set<std::int64_t> occupied_;
  KdTree3 tree_;
  int scans_since_rebuild_ = 0;
};

struct UpdateReport {
  bool applied = false;
  bool degraded = false;       // insufficient map overlap, update skipped
  double match_ratio = 0.0;
  double residual_rms = 0.0;   // m, at the final iterate
  int iterations = 0;
  int points_used = 0;
};

namespace detail {

struct PlaneAssociation {
  Vec3 normal;
  Vec3 centroid;
  Vec3 body_point;  // IMU-frame point
};

}  // namespace detail

// Iterated point-to-plane update. Points are deskewed LiDAR-frame points; the
// association (5-NN plane fit in the map) is done once at the prior, the
// residuals and Jacobians are relinearized each inner iteration.
inline UpdateReport update_with_scan(NavState& x, MatX& p_cov,
                                     const std::vector<Vec3>& points_lidar,
                                     const VoxelMap& map, const SE3& t_imu_lidar,
                                     const LioParams& params) {
  UpdateReport report;
  if (points_lidar.empty() || map.empty()) {
    report.degraded = true;
    return report;
  }
  require_psd(p_cov, "update_with_scan: P");
  const int dim = static_cast<int>(p_cov.rows());

  // Subsample deterministically by stride.
  const int total = static_cast<int>(points_lidar.size());
  const int stride = std::max(1, total / params.max_update_points);

  const NavState prior = x;
  std::vector<detail::PlaneAssociation> assoc;
  std::vector<int> nn;
  std::vector<double> d2;
  int candidates = 0;
  for (int i = 0; i < total; i += stride) {
    ++candidates;
    const Vec3 b = t_imu_lidar * points_lidar[i];
    const Vec3 w = prior.R * b + prior.p;
    map.tree().knn(w, params.plane_knn, nn, d2);
    if (static_cast<int>(nn.size()) < params.plane_knn) continue;

    Vec3 centroid = Vec3::Zero();
    for (int j : nn) centroid += map.tree().points()[j];
    centroid /= static_cast<double>(nn.size());
    Mat3 scatter = Mat3::Zero();
    for (int j : nn) {
      const Vec3 d = map.tree().points()[j] - centroid;
      scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
    const double fit_rms = std::sqrt(std::max(eig.eigenvalues()(0), 0.0) / nn.size());
    if (fit_rms > params.plane_fit_rms_max) continue;
    assoc.push_back({eig.eigenvectors().col(0).normalized(), centroid, b});
  }
  report.points_used = static_cast<int>(assoc.size());
  report.match_ratio = candidates > 0 ? static_cast<double>(assoc.size()) / candidates : 0.0;
  if (report.match_ratio < params.min_match_ratio) {
    report.degraded = true;
    return report;
  }

  const double inv_r = 1.0 / (params.meas_sigma * params.meas_sigma);
  const MatX p_inv = p_cov.llt().solve(MatX::Identity(dim, dim));

  NavState iterate = prior;
  MatX info = MatX::Zero(dim, dim);
  for (int iter = 0; iter < params.max_update_iters; ++iter) {
    info.setZero();
    VecX rhs = VecX::Zero(dim);
    double ss = 0.0;
    for (const auto& a : assoc) {
      const Vec3 w = iterate.R * a.body_point + iterate.p;
      const double z = a.normal.dot(w - a.centroid);
      Eigen::Matrix<double, 1, Eigen::Dynamic> h(1, dim);
      h.setZero();
      h.leftCols<3>() = -a.normal.transpose() * iterate.R * skew(a.body_point);
      h.middleCols<3>(3) = a.normal.transpose();
      info.noalias() += h.transpose() * (inv_r * h);
      rhs.noalias() -= h.transpose() * (inv_r * z);
      ss += z * z;
    }
    report.residual_rms = std::sqrt(ss / assoc.size());
    const VecX err = nav_boxminus(iterate, prior, dim);
    const VecX delta = (info + p_inv).ldlt().solve(rhs - p_inv * err);
    iterate = nav_boxplus(iterate, delta);
    report.iterations = iter + 1;
    if (delta.norm() < params.update_step_tol) break;
  }

  // Joseph-stabilized posterior covariance with K = Sigma H^T R^-1:
  // P+ = (I - Sigma M) P (I - Sigma M)^T + Sigma M Sigma, M = H^T R^-1 H.
  const MatX sigma = (info + p_inv).llt().solve(MatX::Identity(dim, dim));
  const MatX i_kh = MatX::Identity(dim, dim) - sigma * info;
  MatX p_new = i_kh * p_cov * i_kh.transpose() + sigma * info * sigma;
  p_cov = 0.5 * (p_new + p_new.transpose());
  x = iterate;
  report.applied = true;
  return report;
}

struct LioConfig {
  LioParams params;
  SE3 t_imu_lidar;
  ImuNoiseParams imu_noise;
  double pose_buffer_span = 1.0;     // s of IMU poses kept for deskewing
  int reorthonormalize_every = 1000; // IMU steps
};

struct ScanResult {
  double time = 0.0;
  SE3 pose_world_imu;
  std::vector<Vec3> deskewed;  // scan-end LiDAR frame
  UpdateReport update;
};

// Sequential LiDAR-inertial odometry driver: feed IMU samples and scans in
// time order. Single-owner state machine.
class LioOdometry {
 public:
  explicit LioOdometry(const LioConfig& config)
      : config_(config),
        map_(config.params.map_voxel, config.params.map_rebuild_every) {}

  void initialize(double t, const NavState& x0, const VecX& p0_diag) {
    if (p0_diag.size() != config_.params.error_dim()) {
      throw ValidationError("LioOdometry: initial covariance dimension mismatch");
    }
    x_ = x0;
    p_cov_ = p0_diag.asDiagonal();
    t_ = t;
    have_imu_ = false;
    lidar_poses_ = PoseTrajectory();
    push_pose(t);
  }

  void process_imu(const ImuSample& u) {
    if (u.t <= t_) {
      throw ValidationError("LioOdometry: IMU timestamps must be strictly increasing");
    }
    if (have_imu_) {
      advance_to(u.t);
    } else {
      t_ = u.t;
      push_pose(t_);
    }
    last_imu_ = u;
    have_imu_ = true;
  }

  ScanResult process_scan(const std::vector<TimedLidarPoint>& scan) {
    if (scan.empty()) throw ValidationError("LioOdometry: empty scan");
    double t_end = scan.front().time;
    for (const auto& pt : scan) t_end = std::max(t_end, pt.time);
    if (have_imu_ && t_end > t_) advance_to(t_end);

    ScanResult result;
    result.time = t_end;
    result.deskewed = deskew_scan(scan, lidar_poses_, t_end);

    if (map_.empty()) {
      map_.insert_scan(register_to_global(result.deskewed, config_.t_imu_lidar, pose()));
      result.update.degraded = true;  // bootstrap scan, no update possible
    } else {
      result.update = update_with_scan(x_, p_cov_, result.deskewed, map_,
                                       config_.t_imu_lidar, config_.params);
      map_.insert_scan(register_to_global(result.deskewed, config_.t_imu_lidar, pose()));
    }
    result.pose_world_imu = pose();
    lidar_poses_.trim_before(t_ - config_.pose_buffer_span);
    ++scan_count_;
    return result;
  }

  SE3 pose() const { return SE3(x_.R, x_.p); }
  const NavState& state() const { return x_; }
  const MatX& covariance() const { return p_cov_; }
  double time() const { return t_; }
  const VoxelMap& map() const { return map_; }

 private:
  void advance_to(double t_target) {
    while (t_ < t_target - 1e-12) {
      const double dt = std::min(t_target - t_, 0.05);
      x_ = propagate_state(x_, last_imu_, dt);
      p_cov_ = propagate_covariance(p_cov_, x_, last_imu_, dt,
                                    process_noise(config_.imu_noise, dt));
      t_ += dt;
      if (++steps_since_orthonorm_ >= config_.reorthonormalize_every) {
        x_.R = orthonormalize(x_.R);
        steps_since_orthonorm_ = 0;
      }
      push_pose(t_);
    }
  }

  void push_pose(double t) {
    if (!lidar_poses_.empty() && t <= lidar_poses_.t_max()) return;
    lidar_poses_.push(t, pose() * config_.t_imu_lidar);
  }

  LioConfig config_;
  NavState x_;
  MatX p_cov_;
  double t_ = 0.0;
  ImuSample last_imu_;
  bool have_imu_ = false;
  PoseTrajectory lidar_poses_;
  VoxelMap map_;
  int scan_count_ = 0;
  int steps_since_orthonorm_ = 0;
};

}  // namespace thermolio
