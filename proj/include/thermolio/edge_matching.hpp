#pragma once

#include <span>
#include <vector>

#include "thermolio/camera.hpp"
#include "thermolio/canny.hpp"
#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"
#include "thermolio/kdtree.hpp"
#include "thermolio/lidar_edges.hpp"

namespace thermolio {

// Local line through a pixel neighbourhood: mean point, unit normal (the
// eigenvector of the smallest scatter eigenvalue) and the scatter itself.
struct ImageEdgeLocal {
  Vec2 q_mean = Vec2::Zero();
  Vec2 normal = Vec2::Zero();
  Mat2 scatter = Mat2::Zero();
};

// A LiDAR edge sample paired with its local image edge.
struct EdgeCorrespondence {
  Vec3 lidar_point;
  Vec3 lidar_edge_direction;
  ImageEdgeLocal image_edge;
};

struct DegenerateLineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline ImageEdgeLocal fit_local_line(std::span<const Vec2> neighbors) {
  if (neighbors.size() < 2) {
    throw DegenerateLineError("fit_local_line: need at least 2 points");
  }
  ImageEdgeLocal line;
  for (const Vec2& q : neighbors) line.q_mean += q;
  line.q_mean /= static_cast<double>(neighbors.size());
  for (const Vec2& q : neighbors) {
    const Vec2 d = q - line.q_mean;
    line.scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat2> eig(line.scatter);
  if (eig.eigenvalues()(1) < 1e-12) {
    throw DegenerateLineError("fit_local_line: zero scatter (identical points)");
  }
  line.normal = eig.eigenvectors().col(0).normalized();
  return line;
}

struct EdgeMatchParams {
  int k = 5;                       // neighbours per projected sample
  double proximity_gate_px = 20.0;
  double max_normal_dot = 0.5;     // cos 60 deg; |n . edge_dir| must stay below
};

struct EdgeMatchStats {
  int samples_total = 0;
  int behind_camera = 0;
  int outside_image = 0;
  int gated_proximity = 0;
  int gated_orthogonality = 0;
  int degenerate_neighborhood = 0;
};

// Project each LiDAR edge sample through the current extrinsic guess, look up
// its k nearest thermal edge pixels, fit the local line and keep the pair when
// both the proximity gate and the orthogonality gate pass. Non-parallel nearby
// image lines are rejected by the orthogonality gate.
inline std::vector<EdgeCorrespondence> match_edges(
    const std::vector<LidarEdge>& lidar_edges,
    const std::vector<EdgePixel>& thermal_edges, const SE3& extrinsic_guess,
    const Intrinsics& intr, const EdgeMatchParams& params = {},
    EdgeMatchStats* stats = nullptr) {
  if (params.k < 2) throw ValidationError("match_edges: k must be >= 2");

  std::vector<EdgeCorrespondence> matches;
  EdgeMatchStats local_stats;
  if (!thermal_edges.empty()) {
    std::vector<Vec2> pixels(thermal_edges.size());
    for (std::size_t i = 0; i < thermal_edges.size(); ++i) pixels[i] = thermal_edges[i].uv;
    KdTree2 tree(std::move(pixels));

    std::vector<int> nn;
    std::vector<double> d2;
    std::vector<Vec2> neighborhood;
    for (const LidarEdge& edge : lidar_edges) {
      for (const Vec3& sample : edge.samples) {
        ++local_stats.samples_total;
        const Vec3 p_cam = extrinsic_guess * sample;
        if (p_cam.z() <= 1e-9) {
          ++local_stats.behind_camera;
          continue;
        }
        const Vec2 uv = project(p_cam, intr);
        if (intr.has_size() && !pixel_in_image(uv, intr)) {
          ++local_stats.outside_image;
          continue;
        }
        tree.knn(uv, params.k, nn, d2);
        if (static_cast<int>(nn.size()) < params.k) continue;
        neighborhood.clear();
        for (int idx : nn) neighborhood.push_back(tree.points()[idx]);

        ImageEdgeLocal line;
        try {
          line = fit_local_line(neighborhood);
        } catch (const DegenerateLineError&) {
          ++local_stats.degenerate_neighborhood;
          continue;
        }
        if ((uv - line.q_mean).norm() >= params.proximity_gate_px) {
          ++local_stats.gated_proximity;
          continue;
        }
        // Direction of the LiDAR edge in the image plane, via the projection
        // chain Jacobian.
        const Vec2 dir_img =
            project_point_jacobian(p_cam, intr) * (extrinsic_guess.R * edge.direction);
        const double dir_norm = dir_img.norm();
        if (dir_norm < 1e-12) continue;
        if (std::abs(line.normal.dot(dir_img / dir_norm)) >= params.max_normal_dot) {
          ++local_stats.gated_orthogonality;
          continue;
        }
        matches.push_back({sample, edge.direction, line});
      }
    }
  }
  if (stats) *stats = local_stats;
  return matches;
}

}  // namespace thermolio
