#pragma once

#include <vector>

#include "thermolio/camera.hpp"
#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"
#include "thermolio/intrinsic_calibration.hpp"
#include "thermolio/random.hpp"

namespace thermolio::sim {

struct CheckerboardSpec {
  int cols = 9;           // inner corners
  int rows = 6;
  double square = 0.04;   // m
};

// Deterministic board pose schedule: varied tilts and offsets so the view set
// is well conditioned for planar calibration.
inline SE3 checkerboard_pose(const CheckerboardSpec& board, int view_index, Rng& rng) {
  const double half_w = 0.5 * (board.cols - 1) * board.square;
  const double half_h = 0.5 * (board.rows - 1) * board.square;
  const double tilt_x = deg2rad(rng.uniform(-35.0, 35.0));
  const double tilt_y = deg2rad(rng.uniform(-35.0, 35.0));
  const double roll = deg2rad(rng.uniform(-40.0, 40.0));
  const Mat3 r = so3_exp(Vec3(0, 0, roll)) * so3_exp(Vec3(tilt_x, 0, 0)) *
                 so3_exp(Vec3(0, tilt_y, 0));
  // Cycle over image quadrants so corners cover the field of view.
  const double ox = ((view_index % 3) - 1) * 0.28 + rng.uniform(-0.05, 0.05);
  const double oy = (((view_index / 3) % 3) - 1) * 0.22 + rng.uniform(-0.05, 0.05);
  const double dist = rng.uniform(0.45, 0.85);
  // Place the board center at (ox, oy, dist) in the camera frame.
  const Vec3 t = Vec3(ox, oy, dist) - r * Vec3(half_w, half_h, 0.0);
  return SE3(r, t);
}

// Synthetic planar views: exact corner projections plus optional Gaussian
// pixel noise. Corners that would fall behind the camera are never produced
// by the pose schedule.
inline std::vector<PlanarObservation> simulate_checkerboard_views(
    const Intrinsics& truth, const CheckerboardSpec& board, int n_views,
    double corner_noise_px, Rng& rng, std::vector<SE3>* poses_out = nullptr) {
  std::vector<PlanarObservation> views;
  views.reserve(n_views);
  for (int v = 0; v < n_views; ++v) {
    const SE3 pose = checkerboard_pose(board, v, rng);
    PlanarObservation obs;
    for (int j = 0; j < board.rows; ++j) {
      for (int i = 0; i < board.cols; ++i) {
        const Vec2 bp(i * board.square, j * board.square);
        const Vec3 p_cam = pose * Vec3(bp.x(), bp.y(), 0.0);
        Vec2 uv = project(p_cam, truth);
        if (corner_noise_px > 0.0) {
          uv += Vec2(rng.normal(0.0, corner_noise_px), rng.normal(0.0, corner_noise_px));
        }
        obs.board_points.push_back(bp);
        obs.image_points.push_back(uv);
      }
    }
    views.push_back(std::move(obs));
    if (poses_out) poses_out->push_back(pose);
  }
  return views;
}

}  // namespace thermolio::sim
