#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"
#include "thermolio/lio.hpp"
#include "thermolio/trajectory.hpp"

using namespace thermolio;
using test_support::random_rotation;

namespace {

// Dense world-frame grid on three orthogonal planes, a synthetic room corner.
std::vector<Vec3> corner_map_points(double spacing = 0.1) {
  std::vector<Vec3> pts;
  for (double a = 0.0; a <= 4.0; a += spacing) {
    for (double b = 0.0; b <= 3.0; b += spacing) {
      pts.push_back(Vec3(5.0, a - 2.0, b - 1.5));   // wall x = 5
      pts.push_back(Vec3(1.0 + a, 2.0, b - 1.5));   // wall y = 2
      pts.push_back(Vec3(1.0 + a, b - 1.5, -1.0));  // floor z = -1
    }
  }
  return pts;
}

// LiDAR-frame observations of the same planes from a given sensor pose.
std::vector<Vec3> observe_planes(const SE3& t_world_lidar, int n, Rng& rng) {
  std::vector<Vec3> out;
  const SE3 inv = t_world_lidar.inverse();
  while (static_cast<int>(out.size()) < n) {
    const int which = rng.uniform_int(0, 2);
    Vec3 w;
    if (which == 0) {
      w = Vec3(5.0, rng.uniform(-2.0, 2.0), rng.uniform(-1.5, 1.5));
    } else if (which == 1) {
      w = Vec3(rng.uniform(1.0, 5.0), 2.0, rng.uniform(-1.5, 1.5));
    } else {
      w = Vec3(rng.uniform(1.0, 5.0), rng.uniform(-1.5, 2.0), -1.0);
    }
    out.push_back(inv * w);
  }
  return out;
}

}  // namespace

TEST_CASE("pose trajectory interpolation") {
  PoseTrajectory traj;
  const SE3 a(so3_exp(Vec3(0, 0, 0.2)), Vec3(1, 0, 0));
  const SE3 b(so3_exp(Vec3(0, 0, 0.6)), Vec3(3, 2, 0));
  traj.push(0.0, a);
  traj.push(1.0, b);

  const SE3 mid = traj.sample(0.5);
  CHECK((mid.t - Vec3(2, 1, 0)).norm() < 1e-12);
  const Mat3 expected_r = a.R * so3_exp(0.5 * so3_log(a.R.transpose() * b.R));
  CHECK((mid.R - expected_r).norm() < 1e-12);

  CHECK_THROWS_AS(traj.sample(-0.1), RangeError);
  CHECK_THROWS_AS(traj.sample(1.1), RangeError);
  CHECK_THROWS_AS(traj.push(0.5, a), ValidationError);

  traj.push(2.0, a);
  traj.trim_before(0.9);
  CHECK(traj.t_min() == 0.0);  // keeps the bracketing sample
  traj.trim_before(1.5);
  CHECK(traj.t_min() == 1.0);
}

TEST_CASE("deskew leaves a static scan unchanged") {
  PoseTrajectory traj;
  const SE3 pose(so3_exp(Vec3(0.1, 0.2, -0.1)), Vec3(4, -1, 2));
  traj.push(0.0, pose);
  traj.push(0.2, pose);

  Rng rng(901);
  std::vector<TimedLidarPoint> scan;
  for (int i = 0; i < 50; ++i) {
    TimedLidarPoint p;
    p.direction = test_support::random_unit(rng);
    p.depth = rng.uniform(1.0, 10.0);
    p.time = rng.uniform(0.0, 0.2);
    scan.push_back(p);
  }
  const auto out = deskew_scan(scan, traj);
  for (std::size_t i = 0; i < scan.size(); ++i) {
    CHECK((out[i] - scan[i].position()).norm() < 1e-12);
  }
}

TEST_CASE("deskew compensates constant-velocity motion exactly") {
  const Vec3 v(1.5, -0.4, 0.2);
  const double t_scan = 0.1;
  PoseTrajectory traj;
  for (double t = 0.0; t <= t_scan + 1e-9; t += 0.01) {
    traj.push(t, SE3(Mat3::Identity(), v * t));
  }
  // A fixed world point observed at the start and the end of the scan.
  const Vec3 world_point(6.0, 2.0, 1.0);
  auto make_point = [&](double t) {
    const Vec3 in_lidar = world_point - v * t;
    TimedLidarPoint p;
    p.depth = in_lidar.norm();
    p.direction = in_lidar / p.depth;
    p.time = t;
    return p;
  };
  const std::vector<TimedLidarPoint> scan = {make_point(0.0), make_point(t_scan)};
  CHECK((scan[0].position() - scan[1].position() - v * t_scan).norm() < 1e-12);

  const auto out = deskew_scan(scan, traj, t_scan);
  CHECK((out[0] - out[1]).norm() < 1e-9);

  // Point time outside the trajectory: extrapolation refused.
  std::vector<TimedLidarPoint> bad = scan;
  bad[0].time = -0.05;
  CHECK_THROWS_AS(deskew_scan(bad, traj, t_scan), RangeError);
}

TEST_CASE("register_to_global chains the transforms exactly") {
  const std::vector<Vec3> cube = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                  {1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
  const auto same = register_to_global(cube, SE3(), SE3());
  for (std::size_t i = 0; i < cube.size(); ++i) CHECK((same[i] - cube[i]).norm() == 0.0);

  const SE3 t_il(so3_exp(Vec3(0, 0, kPi / 2)), Vec3(0.1, 0, 0));
  const SE3 t_gi(Mat3::Identity(), Vec3(0, 0, 5));
  const auto moved = register_to_global(cube, t_il, t_gi);
  // Hand-computed: rotate (1,0,0) about z by 90 deg -> (0,1,0), shift.
  CHECK((moved[1] - Vec3(0.1, 1.0, 5.0)).norm() < 1e-12);

  Rng rng(903);
  const SE3 a = test_support::random_se3(rng);
  const SE3 b = test_support::random_se3(rng);
  const SE3 composed = b * a;
  const auto chained = register_to_global(cube, a, b);
  for (std::size_t i = 0; i < cube.size(); ++i) {
    CHECK((chained[i] - composed * cube[i]).norm() < 1e-12);
  }
}

TEST_CASE("update with points exactly on the map planes is a no-op") {
  VoxelMap map(0.1, 1);
  map.insert_scan(corner_map_points());

  Rng rng(905);
  const SE3 truth(random_rotation(rng, 0.2), Vec3(2.5, 0.0, 0.0));
  NavState x;
  x.R = truth.R;
  x.p = truth.t;
  const auto pts = observe_planes(truth, 500, rng);

  MatX p = MatX::Identity(15, 15) * 1e-4;
  NavState before = x;
  const auto report = update_with_scan(x, p, pts, map, SE3(), LioParams{});
  REQUIRE(report.applied);
  CHECK(report.match_ratio > 0.9);
  CHECK(report.residual_rms < 1e-6);
  CHECK((x.p - before.p).norm() < 1e-6);
  CHECK((x.R - before.R).norm() < 1e-6);
}

TEST_CASE("update pulls a 5 cm pose offset back to the map") {
  VoxelMap map(0.1, 1);
  map.insert_scan(corner_map_points());

  Rng rng(907);
  const SE3 truth(random_rotation(rng, 0.1), Vec3(2.5, 0.2, 0.1));
  const auto pts = observe_planes(truth, 800, rng);

  NavState x;
  x.R = so3_exp(Vec3(0.01, -0.008, 0.012)) * truth.R;
  x.p = truth.t + Vec3(0.03, -0.028, 0.025);

  MatX p = MatX::Identity(15, 15);
  p.diagonal().head<3>().setConstant(1e-3);
  p.diagonal().segment<3>(3).setConstant(1e-2);

  LioParams params;
  params.meas_sigma = 0.005;
  const auto report = update_with_scan(x, p, pts, map, SE3(), params);
  REQUIRE(report.applied);
  CHECK((x.p - truth.t).norm() < 5e-3);
  CHECK(so3_log(x.R * truth.R.transpose()).norm() < 2e-3);

  // Posterior covariance symmetric PSD.
  CHECK((p - p.transpose()).norm() < 1e-12 * p.norm());
  Eigen::SelfAdjointEigenSolver<MatX> eig(p);
  CHECK(eig.eigenvalues()(0) >= -1e-9);
}

TEST_CASE("featureless map leaves in-plane translation unconstrained") {
  // Single plane z = 0: only z translation and tilt are observable.
  VoxelMap map(0.1, 1);
  std::vector<Vec3> plane_pts;
  for (double a = -3.0; a <= 3.0; a += 0.1) {
    for (double b = -3.0; b <= 3.0; b += 0.1) plane_pts.push_back(Vec3(a, b, 0.0));
  }
  map.insert_scan(plane_pts);

  Rng rng(909);
  NavState x;
  x.p = Vec3(0, 0, 1.5);
  std::vector<Vec3> obs;
  for (int i = 0; i < 400; ++i) {
    const Vec3 w(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), 0.0);
    obs.push_back(w - x.p);
  }

  MatX p = MatX::Identity(15, 15) * 1e-2;
  const MatX p_before = p;
  const auto report = update_with_scan(x, p, obs, map, SE3(), LioParams{});
  REQUIRE(report.applied);
  CHECK(p(3, 3) > 0.99 * p_before(3, 3));  // x translation not reduced
  CHECK(p(4, 4) > 0.99 * p_before(4, 4));  // y translation not reduced
  CHECK(p(5, 5) < 0.2 * p_before(5, 5));   // z translation strongly reduced
}

TEST_CASE("degraded update is skipped when the map barely overlaps") {
  VoxelMap map(0.1, 1);
  map.insert_scan(corner_map_points());
  NavState x;
  x.p = Vec3(100.0, 100.0, 100.0);  // far away from the map
  std::vector<Vec3> pts = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  MatX p = MatX::Identity(15, 15) * 1e-4;
  const NavState before = x;
  const auto report = update_with_scan(x, p, pts, map, SE3(), LioParams{});
  CHECK(report.degraded);
  CHECK_FALSE(report.applied);
  CHECK((x.p - before.p).norm() == 0.0);
}

TEST_CASE("voxel map deduplicates within voxels") {
  VoxelMap map(0.5, 1);
  std::vector<Vec3> pts;
  for (int i = 0; i < 100; ++i) pts.push_back(Vec3(0.01 * i, 0, 0));  // one meter line
  map.insert_scan(pts);
  CHECK(map.size() <= 3);
  CHECK(map.size() >= 2);
}
