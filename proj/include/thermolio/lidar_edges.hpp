#pragma once

#include <cstdint>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"
#include "thermolio/kdtree.hpp"
#include "thermolio/random.hpp"

namespace thermolio {

// Depth-continuous edge: samples along the intersection line of two fitted
// planes, plus the line direction.
struct LidarEdge {
  std::vector<Vec3> samples;
  Vec3 direction;
};

struct LidarEdgeParams {
  double voxel_size = 1.0;          // m
  double plane_inlier_thresh = 0.02;  // m
  double min_dihedral_deg = 30.0;
  double max_dihedral_deg = 150.0;
  double sample_spacing = 0.05;     // m along the edge
  double max_sample_dist = 0.05;    // m to the nearest observed point
  int min_points = 50;              // per cloud
  int min_plane_points = 25;        // inliers per plane
  int max_planes_per_voxel = 4;
  int ransac_iters = 60;
  // After accepting a plane, points within removal_margin * inlier threshold
  // of it leave the working set, so noise shells of an already-segmented
  // plane cannot seed a phantom second plane.
  double removal_margin = 3.0;
  // Reject "planes" whose fit residual correlates with a quadratic along an
  // in-plane axis (curved surfaces such as pillars).
  double max_curvature_corr = 0.5;
  std::uint64_t seed = 1;
};

namespace detail {

struct FittedPlane {
  Vec3 normal;
  double d = 0.0;  // plane: normal . x = d
  std::vector<int> inliers;
};

inline std::int64_t pack_voxel(std::int64_t ix, std::int64_t iy, std::int64_t iz) {
  // 21 bits per axis, offset to keep them positive
  const std::int64_t bias = 1 << 20;
  return ((ix + bias) << 42) | ((iy + bias) << 21) | (iz + bias);
}

inline std::tuple<std::int64_t, std::int64_t, std::int64_t> voxel_coords(std::int64_t key) {
  const std::int64_t bias = 1 << 20;
  const std::int64_t mask = (1 << 21) - 1;
  return {((key >> 42) & mask) - bias, ((key >> 21) & mask) - bias, (key & mask) - bias};
}

inline std::int64_t voxel_key(const Vec3& p, double voxel) {
  const auto q = [&](double x) {
    return static_cast<std::int64_t>(std::floor(x / voxel));
  };
  return pack_voxel(q(p.x()), q(p.y()), q(p.z()));
}

// Least-squares plane through the given subset (centroid + smallest
// eigenvector of the scatter).
inline FittedPlane refine_plane(const std::vector<Vec3>& pts, const std::vector<int>& idx) {
  Vec3 centroid = Vec3::Zero();
  for (int i : idx) centroid += pts[i];
  centroid /= static_cast<double>(idx.size());
  Mat3 scatter = Mat3::Zero();
  for (int i : idx) {
    const Vec3 d = pts[i] - centroid;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  FittedPlane plane;
  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.d = plane.normal.dot(centroid);
  return plane;
}

// Curved-surface sniff test: on a true plane the fit residual is independent
// noise, on a cylinder-like patch it is a parabola along an in-plane axis.
// Returns the largest |correlation| of the residual with the centered squared
// in-plane coordinates.
inline double curvature_correlation(const std::vector<Vec3>& pts, const std::vector<int>& idx,
                                    const FittedPlane& plane) {
  Vec3 centroid = Vec3::Zero();
  for (int i : idx) centroid += pts[i];
  centroid /= static_cast<double>(idx.size());
  Mat3 scatter = Mat3::Zero();
  for (int i : idx) {
    const Vec3 d = pts[i] - centroid;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  const Vec3 e1 = eig.eigenvectors().col(2);  // dominant in-plane axes
  const Vec3 e2 = eig.eigenvectors().col(1);

  const double n = static_cast<double>(idx.size());
  double worst = 0.0;
  for (const Vec3& axis : {e1, e2}) {
    double mean_u2 = 0.0, mean_r = 0.0;
    std::vector<double> u2(idx.size()), res(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Vec3 d = pts[idx[k]] - centroid;
      const double u = d.dot(axis);
      u2[k] = u * u;
      res[k] = plane.normal.dot(pts[idx[k]]) - plane.d;
      mean_u2 += u2[k];
      mean_r += res[k];
    }
    mean_u2 /= n;
    mean_r /= n;
    double cov = 0.0, var_u = 0.0, var_r = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      cov += (u2[k] - mean_u2) * (res[k] - mean_r);
      var_u += (u2[k] - mean_u2) * (u2[k] - mean_u2);
      var_r += (res[k] - mean_r) * (res[k] - mean_r);
    }
    if (var_u > 1e-18 && var_r > 1e-18) {
      worst = std::max(worst, std::abs(cov) / std::sqrt(var_u * var_r));
    }
  }
  return worst;
}

// Iterative random-sampling consensus for one plane in a voxel.
inline bool ransac_plane(const std::vector<Vec3>& pts, const std::vector<int>& active,
                         const LidarEdgeParams& params, Rng& rng, FittedPlane& out) {
  const int n = static_cast<int>(active.size());
  if (n < params.min_plane_points) return false;
  int best_count = 0;
  Vec3 best_normal = Vec3::UnitZ();
  double best_d = 0.0;
  for (int it = 0; it < params.ransac_iters; ++it) {
    const int a = active[rng.uniform_int(0, n - 1)];
    const int b = active[rng.uniform_int(0, n - 1)];
    const int c = active[rng.uniform_int(0, n - 1)];
    if (a == b || b == c || a == c) continue;
    const Vec3 normal_raw = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    const double norm = normal_raw.norm();
    if (norm < 1e-9) continue;
    const Vec3 normal = normal_raw / norm;
    const double d = normal.dot(pts[a]);
    int count = 0;
    for (int i : active) {
      if (std::abs(normal.dot(pts[i]) - d) < params.plane_inlier_thresh) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_normal = normal;
      best_d = d;
    }
  }
  if (best_count < params.min_plane_points) return false;

  // Refine on consensus, then re-collect inliers with the refined plane.
  std::vector<int> inliers;
  for (int i : active) {
    if (std::abs(best_normal.dot(pts[i]) - best_d) < params.plane_inlier_thresh) {
      inliers.push_back(i);
    }
  }
  FittedPlane refined = refine_plane(pts, inliers);
  refined.inliers.clear();
  for (int i : active) {
    if (std::abs(refined.normal.dot(pts[i]) - refined.d) < params.plane_inlier_thresh) {
      refined.inliers.push_back(i);
    }
  }
  if (static_cast<int>(refined.inliers.size()) < params.min_plane_points) return false;
  out = refined;
  return true;
}

// Point on the intersection line of two planes closest to the origin of the
// (n1, n2) system.
inline Vec3 plane_intersection_point(const FittedPlane& p1, const FittedPlane& p2) {
  const double c = p1.normal.dot(p2.normal);
  const double denom = 1.0 - c * c;
  const double a1 = (p1.d - p2.d * c) / denom;
  const double a2 = (p2.d - p1.d * c) / denom;
  return a1 * p1.normal + a2 * p2.normal;
}

}  // namespace detail

// Voxelize the cloud, segment planes per voxel by random-sampling consensus,
// and emit sampled intersection lines of plane pairs whose dihedral angle is
// inside the configured gate. Samples more than max_sample_dist from any
// observed point are discarded, so only physically supported edge stretches
// survive.
inline std::vector<LidarEdge> extract_lidar_edges(const std::vector<Vec3>& cloud,
                                                  const LidarEdgeParams& params = {}) {
  std::vector<LidarEdge> edges;
  if (static_cast<int>(cloud.size()) < params.min_points) return edges;

  std::unordered_map<std::int64_t, std::vector<int>> voxels;
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
    voxels[detail::voxel_key(cloud[i], params.voxel_size)].push_back(i);
  }
  // Deterministic voxel order regardless of hash-map iteration.
  std::vector<std::int64_t> keys;
  keys.reserve(voxels.size());
  for (const auto& [k, v] : voxels) keys.push_back(k);
  std::sort(keys.begin(), keys.end());

  Rng rng(params.seed);
  const double cos_gate = std::cos(deg2rad(params.min_dihedral_deg));
  // Surfaces that straddle a voxel boundary leave only a half-sided noise
  // sheet inside one cell; fitting over a neighbour halo keeps the plane
  // estimates unbiased. Emitted samples stay clipped to the core voxel.
  const double halo = std::max(0.15, 4.0 * params.plane_inlier_thresh);

  for (const std::int64_t key : keys) {
    const std::vector<int>& core_points = voxels[key];
    if (static_cast<int>(core_points.size()) < params.min_plane_points) continue;

    Vec3 core_lo = cloud[core_points[0]], core_hi = core_lo;
    for (int i : core_points) {
      core_lo = core_lo.cwiseMin(cloud[i]);
      core_hi = core_hi.cwiseMax(cloud[i]);
    }
    std::vector<int> voxel_points;
    {
      const auto [ix, iy, iz] = detail::voxel_coords(key);
      const Vec3 lo_h = core_lo - Vec3::Constant(halo);
      const Vec3 hi_h = core_hi + Vec3::Constant(halo);
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dz = -1; dz <= 1; ++dz) {
            const auto it = voxels.find(detail::pack_voxel(ix + dx, iy + dy, iz + dz));
            if (it == voxels.end()) continue;
            for (int i : it->second) {
              if ((cloud[i].array() >= lo_h.array()).all() &&
                  (cloud[i].array() <= hi_h.array()).all()) {
                voxel_points.push_back(i);
              }
            }
          }
        }
      }
    }
    if (static_cast<int>(voxel_points.size()) < 2 * params.min_plane_points) continue;

    std::vector<detail::FittedPlane> planes;
    std::vector<int> active = voxel_points;
    for (int k = 0; k < params.max_planes_per_voxel; ++k) {
      detail::FittedPlane plane;
      if (!detail::ransac_plane(cloud, active, params, rng, plane)) break;
      // Remove a wide band around the accepted plane, not just its inliers.
      const double margin = params.removal_margin * params.plane_inlier_thresh;
      std::vector<int> remaining;
      for (int i : active) {
        if (std::abs(plane.normal.dot(cloud[i]) - plane.d) >= margin) {
          remaining.push_back(i);
        }
      }
      active = std::move(remaining);
      if (detail::curvature_correlation(cloud, plane.inliers, plane) >
          params.max_curvature_corr) {
        continue;  // pillar-like patch, not a plane
      }
      planes.push_back(std::move(plane));
    }
    if (planes.size() < 2) continue;

    // Intersection lines clip to the core voxel's extent.
    const Vec3 lo = core_lo;
    const Vec3 hi = core_hi;

    std::vector<Vec3> local;
    local.reserve(voxel_points.size());
    for (int i : voxel_points) local.push_back(cloud[i]);
    KdTree3 support(local);

    for (std::size_t a = 0; a < planes.size(); ++a) {
      for (std::size_t b = a + 1; b < planes.size(); ++b) {
        const double c = std::abs(planes[a].normal.dot(planes[b].normal));
        if (c > cos_gate) continue;  // dihedral outside [30, 150] degrees

        const Vec3 dir = planes[a].normal.cross(planes[b].normal).normalized();
        const Vec3 p0 = detail::plane_intersection_point(planes[a], planes[b]);

        // Clip parametric line p0 + t*dir to the voxel box (slab method).
        double t0 = -std::numeric_limits<double>::infinity();
        double t1 = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (int axis = 0; axis < 3 && ok; ++axis) {
          if (std::abs(dir[axis]) < 1e-12) {
            if (p0[axis] < lo[axis] - 1e-9 || p0[axis] > hi[axis] + 1e-9) ok = false;
            continue;
          }
          double ta = (lo[axis] - p0[axis]) / dir[axis];
          double tb = (hi[axis] - p0[axis]) / dir[axis];
          if (ta > tb) std::swap(ta, tb);
          t0 = std::max(t0, ta);
          t1 = std::min(t1, tb);
        }
        if (!ok || t1 <= t0) continue;

        LidarEdge edge;
        edge.direction = dir;
        std::vector<int> nn;
        std::vector<double> d2;
        for (double t = t0; t <= t1 + 1e-12; t += params.sample_spacing) {
          const Vec3 s = p0 + t * dir;
          support.knn(s, 1, nn, d2);
          if (!d2.empty() && d2[0] <= params.max_sample_dist * params.max_sample_dist) {
            edge.samples.push_back(s);
          }
        }
        if (edge.samples.size() >= 2) edges.push_back(std::move(edge));
      }
    }
  }
  return edges;
}

}  // namespace thermolio
