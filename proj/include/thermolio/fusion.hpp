#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "thermolio/camera.hpp"
#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"
#include "thermolio/kdtree.hpp"
#include "thermolio/radiometry.hpp"
#include "thermolio/raster.hpp"

namespace thermolio {

struct ThermalPoint {
  Vec3 position;            // meters
  float temperature_c = 0.0f;
  float confidence = 0.0f;  // 1 at normal incidence, 0 at grazing
  std::int32_t source_scan_id = -1;
};

struct ThermalPointCloud {
  std::vector<ThermalPoint> points;
};

struct FramePairing {
  int scan_id = -1;
  int frame_id = -1;
  double time_offset = 0.0;  // frame time - scan time
};

struct PairingResult {
  std::vector<FramePairing> pairings;
  std::vector<int> unpaired_scans;
};

// Nearest frame per scan within the tolerance window (default matches a 50 Hz
// camera: half a frame period plus slack).
inline PairingResult pair_streams(const std::vector<double>& scan_times,
                                  const std::vector<double>& frame_times,
                                  double tolerance = 0.02) {
  PairingResult result;
  std::size_t j = 0;
  for (std::size_t i = 0; i < scan_times.size(); ++i) {
    while (j + 1 < frame_times.size() &&
           std::abs(frame_times[j + 1] - scan_times[i]) <=
               std::abs(frame_times[j] - scan_times[i])) {
      ++j;
    }
    if (!frame_times.empty() &&
        std::abs(frame_times[j] - scan_times[i]) <= tolerance) {
      result.pairings.push_back({static_cast<int>(i), static_cast<int>(j),
                                 frame_times[j] - scan_times[i]});
    } else {
      result.unpaired_scans.push_back(static_cast<int>(i));
    }
  }
  return result;
}

// Z-buffer visibility: bin projected points, mark points deeper than the bin
// minimum by more than depth_gate as occluded. Points behind the camera or
// outside the image are reported visible here and culled by the colorizer.
inline std::vector<bool> occlusion_filter(const std::vector<Vec3>& points_cam,
                                          const Intrinsics& intr, double bin_px = 2.0,
                                          double depth_gate = 0.3) {
  std::vector<bool> visible(points_cam.size(), true);
  std::unordered_map<std::int64_t, double> min_depth;
  std::vector<std::int64_t> keys(points_cam.size(), -1);
  const auto bin_of = [&](const Vec2& uv) -> std::int64_t {
    const std::int64_t bu = static_cast<std::int64_t>(std::floor(uv.x() / bin_px));
    const std::int64_t bv = static_cast<std::int64_t>(std::floor(uv.y() / bin_px));
    return (bu << 24) ^ bv;
  };
  for (std::size_t i = 0; i < points_cam.size(); ++i) {
    const Vec3& p = points_cam[i];
    if (p.z() <= 0.0) continue;
    const Vec2 uv = project(p, intr);
    if (intr.has_size() && !pixel_in_image(uv, intr)) continue;
    const std::int64_t key = bin_of(uv);
    keys[i] = key;
    const auto it = min_depth.find(key);
    if (it == min_depth.end() || p.z() < it->second) min_depth[key] = p.z();
  }
  for (std::size_t i = 0; i < points_cam.size(); ++i) {
    if (keys[i] < 0) continue;
    if (points_cam[i].z() > min_depth[keys[i]] + depth_gate) visible[i] = false;
  }
  return visible;
}

struct ColorizeParams {
  double occlusion_bin_px = 2.0;
  double occlusion_depth_gate = 0.3;  // m
  int normal_knn = 5;                 // neighbours for incidence estimation
};

struct ColorizeReport {
  int assigned = 0;
  int behind_camera = 0;
  int outside_image = 0;
  int occluded = 0;
  int out_of_range = 0;  // DN outside the radiometric model range
};

// Assign temperatures to a camera-frame cloud from one thermal frame:
// project with distortion, bilinear-sample the DN raster, invert through the
// radiometric model. Occluded, out-of-view and out-of-range points are
// dropped and counted. Confidence is 1 minus the normalized incidence
// obliquity from a local plane fit.
inline ThermalPointCloud colorize_scan(const std::vector<Vec3>& points_cam,
                                       const ThermalFrame& frame, const Intrinsics& intr,
                                       const DnTemperatureTable& dn_table,
                                       std::int32_t scan_id = -1,
                                       const ColorizeParams& params = {},
                                       ColorizeReport* report_out = nullptr) {
  if (frame.width != intr.width || frame.height != intr.height) {
    throw ValidationError("colorize_scan: frame size does not match intrinsics");
  }
  ColorizeReport report;
  ThermalPointCloud cloud;
  const std::vector<bool> visible =
      occlusion_filter(points_cam, intr, params.occlusion_bin_px, params.occlusion_depth_gate);

  KdTree3 tree(points_cam);
  std::vector<int> nn;
  std::vector<double> d2;
  for (std::size_t i = 0; i < points_cam.size(); ++i) {
    const Vec3& p = points_cam[i];
    if (p.z() <= 0.0) {
      ++report.behind_camera;
      continue;
    }
    const Vec2 uv = project(p, intr);
    if (!pixel_in_image(uv, intr)) {
      ++report.outside_image;
      continue;
    }
    if (!visible[i]) {
      ++report.occluded;
      continue;
    }
    const double dn = frame.sample_bilinear(uv.x(), uv.y());
    if (!dn_table.in_range(dn)) {
      ++report.out_of_range;
      continue;
    }

    // Incidence obliquity from the local neighbourhood plane.
    double confidence = 0.5;
    tree.knn(p, params.normal_knn, nn, d2);
    if (static_cast<int>(nn.size()) >= 3) {
      Vec3 centroid = Vec3::Zero();
      for (int j : nn) centroid += points_cam[j];
      centroid /= static_cast<double>(nn.size());
      Mat3 scatter = Mat3::Zero();
      for (int j : nn) {
        const Vec3 d = points_cam[j] - centroid;
        scatter += d * d.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
      const Vec3 normal = eig.eigenvectors().col(0);
      const double cos_inc = std::min(1.0, std::abs(normal.dot(p.normalized())));
      confidence = 1.0 - std::acos(cos_inc) / (kPi / 2.0);
    }

    ThermalPoint tp;
    tp.position = p;
    tp.temperature_c = static_cast<float>(kelvin_to_celsius(dn_table.temperature_k(dn)));
    tp.confidence = static_cast<float>(std::clamp(confidence, 0.0, 1.0));
    tp.source_scan_id = scan_id;
    cloud.points.push_back(tp);
    ++report.assigned;
  }
  if (report_out) *report_out = report;
  return cloud;
}

struct AccumulateParams {
  bool voxel_merge = true;
  double voxel = 0.05;  // m
};

struct AccumulateResult {
  ThermalPointCloud cloud;
  std::vector<int> skipped_fragments;  // missing pose
};

// Rigid-transform fragments into the global frame and concatenate; with voxel
// merge on, the highest-confidence point wins each voxel (first arrival wins
// ties, so accumulation order is reproducible).
inline AccumulateResult accumulate_map(const std::vector<ThermalPointCloud>& fragments,
                                       const std::vector<std::optional<SE3>>& poses,
                                       const AccumulateParams& params = {}) {
  if (fragments.size() != poses.size()) {
    throw ValidationError("accumulate_map: fragment/pose count mismatch");
  }
  AccumulateResult result;
  std::unordered_map<std::int64_t, std::size_t> voxel_best;
  const auto key_of = [&](const Vec3& p) {
    const auto q = [&](double x) {
      return static_cast<std::int64_t>(std::floor(x / params.voxel));
    };
    const std::int64_t bias = 1 << 20;
    return ((q(p.x()) + bias) << 42) | ((q(p.y()) + bias) << 21) | (q(p.z()) + bias);
  };

  for (std::size_t f = 0; f < fragments.size(); ++f) {
    if (!poses[f]) {
      result.skipped_fragments.push_back(static_cast<int>(f));
      continue;
    }
    for (const ThermalPoint& tp : fragments[f].points) {
      ThermalPoint moved = tp;
      moved.position = *poses[f] * tp.position;
      if (!params.voxel_merge) {
        result.cloud.points.push_back(moved);
        continue;
      }
      const std::int64_t key = key_of(moved.position);
      const auto it = voxel_best.find(key);
      if (it == voxel_best.end()) {
        voxel_best.emplace(key, result.cloud.points.size());
        result.cloud.points.push_back(moved);
      } else if (moved.confidence > result.cloud.points[it->second].confidence) {
        result.cloud.points[it->second] = moved;
      }
    }
  }
  return result;
}

}  // namespace thermolio
