#include <filesystem>

#include <catch2/catch_amalgamated.hpp>

#include "edge_scene.hpp"
#include "test_support.hpp"
#include "thermolio/fusion.hpp"
#include "thermolio/ply.hpp"
#include "thermolio/sim/scene.hpp"
#include "thermolio/sim/sensors.hpp"

using namespace thermolio;

namespace {

sim::SensorRig quiet_rig() {
  auto rig = sim::default_rig();
  rig.dn_read_noise = 0.0;
  return rig;
}

DnTemperatureTable table_for(const sim::SensorRig& rig) {
  return DnTemperatureTable(rig.radiometric);
}

}  // namespace

TEST_CASE("stream pairing") {
  // Identical stamps pair with zero offset.
  const std::vector<double> t = {0.0, 0.1, 0.2};
  const auto same = pair_streams(t, t, 0.02);
  REQUIRE(same.pairings.size() == 3);
  for (const auto& p : same.pairings) CHECK(p.time_offset == 0.0);

  // 50 Hz frames vs 10 Hz scans: all paired within 10 ms.
  std::vector<double> frames, scans;
  for (int i = 0; i < 250; ++i) frames.push_back(0.003 + i * 0.02);
  for (int i = 0; i < 50; ++i) scans.push_back(i * 0.1);
  const auto result = pair_streams(scans, frames, 0.02);
  CHECK(result.pairings.size() == scans.size());
  CHECK(result.unpaired_scans.empty());
  for (const auto& p : result.pairings) CHECK(std::abs(p.time_offset) <= 0.0101);

  // A scan one second past the last frame stays unpaired.
  const auto gap = pair_streams({10.0}, frames, 0.02);
  CHECK(gap.pairings.empty());
  REQUIRE(gap.unpaired_scans.size() == 1);

  CHECK(pair_streams({}, {}, 0.02).pairings.empty());
}

TEST_CASE("occlusion filter marks hidden points") {
  Intrinsics intr = quiet_rig().intrinsics;

  // Single plane: everything visible.
  std::vector<Vec3> single;
  for (double x = -0.5; x <= 0.5; x += 0.05) {
    for (double y = -0.4; y <= 0.4; y += 0.05) single.push_back(Vec3(x, y, 3.0));
  }
  const auto vis1 = occlusion_filter(single, intr);
  for (bool v : vis1) CHECK(v);

  // A nearer plane fully covering a farther one: the rear is occluded.
  std::vector<Vec3> two = single;
  const std::size_t front_count = two.size();
  for (double x = -0.5; x <= 0.5; x += 0.05) {
    for (double y = -0.4; y <= 0.4; y += 0.05) two.push_back(Vec3(x, y, 6.0) * 2.0);
  }
  const auto vis2 = occlusion_filter(two, intr);
  int rear_visible = 0;
  for (std::size_t i = front_count; i < two.size(); ++i) {
    if (vis2[i]) ++rear_visible;
  }
  CHECK(rear_visible == 0);
}

TEST_CASE("occlusion filter agrees with the ray-cast oracle on the corner scene") {
  const sim::SceneModel scene = sim::make_corner_scene();
  auto rig = quiet_rig();
  Rng rng(1101);
  sim::StaticTrajectory traj(SE3(Mat3::Identity(), Vec3(1.2, -0.4, 0.2)));
  const auto scan = sim::simulate_lidar_scan(rig, scene, traj, 0.0, 0.1, 6000, 0, rng, false);

  // Camera frame points through the true extrinsic chain.
  const SE3 lidar_pose = traj.pose(0.0) * rig.t_imu_lidar;        // lidar -> world
  const SE3 cam_pose = lidar_pose * rig.t_cam_lidar.inverse();    // camera -> world
  std::vector<Vec3> cam_points;
  for (const auto& p : scan.measured) cam_points.push_back(rig.t_cam_lidar * p.position());

  const auto mask = occlusion_filter(cam_points, rig.intrinsics, 2.0, 0.3);
  int agree = 0, total = 0;
  for (std::size_t i = 0; i < cam_points.size(); ++i) {
    if (cam_points[i].z() <= 0.0) continue;
    const Vec2 uv = project(cam_points[i], rig.intrinsics);
    if (!pixel_in_image(uv, rig.intrinsics)) continue;
    // Oracle: cast from the camera through this point; visible when nothing
    // sits meaningfully in front of it.
    const Vec3 dir_world = (cam_pose.R * cam_points[i]).normalized();
    const auto hit = sim::raycast(cam_pose.t, dir_world, scene);
    const bool truly_visible = hit && hit->range > cam_points[i].norm() - 0.15;
    ++total;
    if (truly_visible == mask[i]) ++agree;
  }
  REQUIRE(total > 2000);
  CHECK(static_cast<double>(agree) / total >= 0.98);
}

TEST_CASE("colorize assigns the forward-model temperature at a known pixel") {
  auto rig = quiet_rig();
  const auto table = table_for(rig);
  ThermalFrame frame(rig.intrinsics.width, rig.intrinsics.height, 0.0);
  const double dn = temperature_to_dn(celsius_to_kelvin(41.5), rig.radiometric);
  std::fill(frame.dn.begin(), frame.dn.end(), static_cast<float>(dn));

  const std::vector<Vec3> pts = {Vec3(0.2, -0.1, 2.0)};
  ColorizeReport report;
  const auto cloud = colorize_scan(pts, frame, rig.intrinsics, table, 7, {}, &report);
  REQUIRE(cloud.points.size() == 1);
  CHECK(report.assigned == 1);
  CHECK(cloud.points[0].temperature_c == Catch::Approx(41.5).margin(2e-3));
  CHECK(cloud.points[0].source_scan_id == 7);

  // Behind-camera and out-of-image points are dropped and counted.
  const std::vector<Vec3> bad = {Vec3(0, 0, -1.0), Vec3(50.0, 0, 1.0)};
  ColorizeReport report2;
  const auto none = colorize_scan(bad, frame, rig.intrinsics, table, 0, {}, &report2);
  CHECK(none.points.empty());
  CHECK(report2.behind_camera == 1);
  CHECK(report2.outside_image == 1);

  ThermalFrame wrong_size(100, 80, 0.0);
  CHECK_THROWS_AS(colorize_scan(pts, wrong_size, rig.intrinsics, table), ValidationError);
}

TEST_CASE("uniform wall colorizes with sub-0.1C spread and respects occlusion") {
  auto rig = quiet_rig();
  const auto table = table_for(rig);
  sim::SceneModel scene;
  scene.planes.push_back(sim::make_plane(Vec3(3, -30, -30), Vec3(0, 1, 0), Vec3(0, 0, 1),
                                         {{0, 0}, {60, 0}, {60, 60}, {0, 60}}, 36.0,
                                         "wall"));
  Rng rng(1103);
  const SE3 cam_in_world(test_support::default_extrinsic_truth().R.transpose(),
                         Vec3::Zero());
  const ThermalFrame frame =
      sim::render_thermal_frame(rig, scene, cam_in_world, 0.0, rng, false);

  // Observe the wall from the camera: points on the wall plus a deliberately
  // occluded copy behind it along each ray.
  std::vector<Vec3> cam_points;
  int n_front = 0;
  for (double a = -0.4; a <= 0.4; a += 0.02) {
    for (double b = -0.3; b <= 0.3; b += 0.02) {
      const Vec3 dir_cam = Vec3(a, b, 1.0).normalized();
      const auto hit = sim::raycast(cam_in_world.t, cam_in_world.R * dir_cam, scene);
      if (!hit) continue;
      const Vec3 p_cam = cam_in_world.R.transpose() * (hit->point - cam_in_world.t);
      cam_points.push_back(p_cam);
      ++n_front;
    }
  }
  const int front_total = n_front;
  for (int i = 0; i < front_total; ++i) {
    cam_points.push_back(cam_points[i] * 1.4);  // hidden behind the wall
  }

  ColorizeReport report;
  const auto cloud = colorize_scan(cam_points, frame, rig.intrinsics, table, 0, {}, &report);
  CHECK(report.occluded == front_total);
  REQUIRE(static_cast<int>(cloud.points.size()) == front_total);

  double mean = 0.0;
  for (const auto& p : cloud.points) mean += p.temperature_c;
  mean /= cloud.points.size();
  double var = 0.0;
  for (const auto& p : cloud.points) {
    var += (p.temperature_c - mean) * (p.temperature_c - mean);
  }
  CHECK(std::abs(mean - 36.0) < 0.05);
  CHECK(std::sqrt(var / cloud.points.size()) < 0.1);
}

TEST_CASE("accumulate_map merges by confidence") {
  ThermalPointCloud frag;
  frag.points.push_back({Vec3(1, 1, 1), 30.0f, 0.9f, 0});
  const auto identity = accumulate_map({frag}, {SE3()});
  REQUIRE(identity.cloud.points.size() == 1);
  CHECK((identity.cloud.points[0].position - Vec3(1, 1, 1)).norm() == 0.0);

  // Two points in the same voxel: the higher confidence temperature wins.
  ThermalPointCloud a, b;
  a.points.push_back({Vec3(0.51, 0.5, 0.5), 30.0f, 0.9f, 0});
  b.points.push_back({Vec3(0.52, 0.5, 0.5), 45.0f, 0.4f, 1});
  const auto merged = accumulate_map({a, b}, {SE3(), SE3()});
  REQUIRE(merged.cloud.points.size() == 1);
  CHECK(merged.cloud.points[0].temperature_c == 30.0f);

  // Merge off: plain concatenation.
  AccumulateParams no_merge;
  no_merge.voxel_merge = false;
  CHECK(accumulate_map({a, b}, {SE3(), SE3()}, no_merge).cloud.points.size() == 2);

  // Missing pose: fragment skipped, others processed.
  const auto skipped = accumulate_map({a, b}, {std::nullopt, SE3()});
  CHECK(skipped.cloud.points.size() == 1);
  REQUIRE(skipped.skipped_fragments.size() == 1);
  CHECK(skipped.skipped_fragments[0] == 0);

  CHECK_THROWS_AS(accumulate_map({a}, {}), ValidationError);
}

TEST_CASE("two views of one wall merge into a thin sheet") {
  auto rig = quiet_rig();
  const auto table = table_for(rig);
  sim::SceneModel scene;
  scene.planes.push_back(sim::make_plane(Vec3(4, -10, -10), Vec3(0, 1, 0), Vec3(0, 0, 1),
                                         {{0, 0}, {20, 0}, {20, 20}, {0, 20}}, 33.0,
                                         "wall"));
  Rng rng(1105);

  std::vector<ThermalPointCloud> fragments;
  std::vector<std::optional<SE3>> poses;
  for (const Vec3 origin : {Vec3(0.5, -0.3, 0.0), Vec3(1.0, 0.4, 0.15)}) {
    const SE3 cam_in_world(test_support::default_extrinsic_truth().R.transpose(), origin);
    const ThermalFrame frame =
        sim::render_thermal_frame(rig, scene, cam_in_world, 0.0, rng, false);
    std::vector<Vec3> cam_points;
    for (double a = -0.45; a <= 0.45; a += 0.015) {
      for (double b = -0.35; b <= 0.35; b += 0.015) {
        const Vec3 dir = Vec3(a, b, 1.0).normalized();
        const auto hit = sim::raycast(cam_in_world.t, cam_in_world.R * dir, scene);
        if (!hit) continue;
        cam_points.push_back(cam_in_world.R.transpose() * (hit->point - cam_in_world.t));
      }
    }
    fragments.push_back(colorize_scan(cam_points, frame, rig.intrinsics, table));
    poses.push_back(cam_in_world);
  }

  const auto merged = accumulate_map(fragments, poses);
  REQUIRE(merged.cloud.points.size() > 500);
  double max_off = 0.0;
  for (const auto& p : merged.cloud.points) {
    max_off = std::max(max_off, std::abs(p.position.x() - 4.0));
  }
  CHECK(max_off < 0.02);  // wall thickness under zero noise
}

TEST_CASE("fusing the same pair twice is idempotent") {
  auto rig = quiet_rig();
  const auto table = table_for(rig);
  ThermalFrame frame(rig.intrinsics.width, rig.intrinsics.height, 0.0);
  const double dn = temperature_to_dn(celsius_to_kelvin(35.0), rig.radiometric);
  std::fill(frame.dn.begin(), frame.dn.end(), static_cast<float>(dn));

  Rng rng(1107);
  std::vector<Vec3> pts;
  for (int i = 0; i < 300; ++i) {
    pts.push_back(Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.4, 0.4), rng.uniform(1.0, 4.0)));
  }
  const auto c1 = colorize_scan(pts, frame, rig.intrinsics, table, 3);
  const auto c2 = colorize_scan(pts, frame, rig.intrinsics, table, 3);
  REQUIRE(c1.points.size() == c2.points.size());
  for (std::size_t i = 0; i < c1.points.size(); ++i) {
    CHECK((c1.points[i].position - c2.points[i].position).norm() == 0.0);
    CHECK(c1.points[i].temperature_c == c2.points[i].temperature_c);
    CHECK(c1.points[i].confidence == c2.points[i].confidence);
  }
}

TEST_CASE("ply round trips in both formats") {
  ThermalPointCloud cloud;
  Rng rng(1109);
  for (int i = 0; i < 100; ++i) {
    cloud.points.push_back({rng.normal3() * 5.0, static_cast<float>(rng.uniform(20, 50)),
                            static_cast<float>(rng.uniform01()), i});
  }
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "thermolio_ply_test";
  fs::create_directories(dir);

  for (bool binary : {true, false}) {
    const std::string path = (dir / (binary ? "b.ply" : "a.ply")).string();
    write_ply(path, cloud, binary);
    const auto loaded = read_ply(path);
    REQUIRE(loaded.points.size() == cloud.points.size());
    const double tol = binary ? 0.0 : 1e-3;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      CHECK((loaded.points[i].position -
             Vec3(static_cast<float>(cloud.points[i].position.x()),
                  static_cast<float>(cloud.points[i].position.y()),
                  static_cast<float>(cloud.points[i].position.z())))
                .norm() <= tol * 10);
      CHECK(std::abs(loaded.points[i].temperature_c - cloud.points[i].temperature_c) <=
            tol);
    }
  }
  fs::remove_all(dir);
}
