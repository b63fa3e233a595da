#pragma once

#include <optional>
#include <string>
#include <vector>

#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"

namespace thermolio::sim {

// Axis-aligned rectangle in plane-local (u, v) coordinates with its own
// temperature. Patches must not overlap; anything uncovered takes the plane's
// base temperature.
struct TemperaturePatch {
  double u0 = 0.0, v0 = 0.0, u1 = 0.0, v1 = 0.0;
  double temperature_c = 20.0;

  bool contains(const Vec2& uv) const {
    return uv.x() >= u0 && uv.x() <= u1 && uv.y() >= v0 && uv.y() <= v1;
  }
  bool overlaps(const TemperaturePatch& o) const {
    return u0 < o.u1 && o.u0 < u1 && v0 < o.v1 && o.v0 < v1;
  }
};

// Planar facet: origin + orthonormal in-plane axes, a convex polygon boundary
// in plane coordinates, and a piecewise-constant temperature field.
struct ScenePlane {
  Vec3 origin;
  Vec3 e1, e2;          // in-plane axes, orthonormal
  Vec3 normal;          // e1 x e2
  std::vector<Vec2> polygon;  // convex, counter-clockwise in (e1, e2)
  double base_temperature_c = 20.0;
  std::vector<TemperaturePatch> patches;
  std::string name;

  Vec2 to_local(const Vec3& p) const {
    return Vec2((p - origin).dot(e1), (p - origin).dot(e2));
  }
  Vec3 to_world(const Vec2& uv) const { return origin + uv.x() * e1 + uv.y() * e2; }

  bool inside(const Vec2& uv) const {
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = polygon[i];
      const Vec2& b = polygon[(i + 1) % n];
      const Vec2 edge = b - a;
      if (edge.x() * (uv.y() - a.y()) - edge.y() * (uv.x() - a.x()) < -1e-12) return false;
    }
    return true;
  }

  double temperature_at(const Vec2& uv) const {
    for (const auto& patch : patches) {
      if (patch.contains(uv)) return patch.temperature_c;
    }
    return base_temperature_c;
  }
};

inline ScenePlane make_plane(const Vec3& origin, const Vec3& e1_raw, const Vec3& e2_raw,
                             const std::vector<Vec2>& polygon, double base_temp_c,
                             std::string name = {}) {
  ScenePlane plane;
  plane.origin = origin;
  plane.e1 = e1_raw.normalized();
  plane.e2 = (e2_raw - e2_raw.dot(plane.e1) * plane.e1).normalized();
  plane.normal = plane.e1.cross(plane.e2);
  plane.polygon = polygon;
  plane.base_temperature_c = base_temp_c;
  plane.name = std::move(name);
  return plane;
}

struct SceneModel {
  std::vector<ScenePlane> planes;

  void validate() const {
    for (const auto& plane : planes) {
      if (std::abs(plane.normal.norm() - 1.0) > 1e-9 ||
          std::abs(plane.e1.dot(plane.e2)) > 1e-9) {
        throw ValidationError("SceneModel: plane axes are not orthonormal");
      }
      if (plane.polygon.size() < 3) {
        throw ValidationError("SceneModel: polygon needs at least 3 vertices");
      }
      for (std::size_t i = 0; i < plane.patches.size(); ++i) {
        for (std::size_t j = i + 1; j < plane.patches.size(); ++j) {
          if (plane.patches[i].overlaps(plane.patches[j])) {
            throw ValidationError("SceneModel: overlapping temperature patches on '" +
                                  plane.name + "'");
          }
        }
      }
    }
  }
};

struct RayHit {
  Vec3 point;
  int plane_id = -1;
  double temperature_c = 0.0;
  double range = 0.0;
};

// Nearest forward intersection with any facet; miss is a value.
inline std::optional<RayHit> raycast(const Vec3& origin, const Vec3& direction,
                                     const SceneModel& scene, double min_range = 1e-6) {
  std::optional<RayHit> best;
  for (int i = 0; i < static_cast<int>(scene.planes.size()); ++i) {
    const ScenePlane& plane = scene.planes[i];
    const double denom = direction.dot(plane.normal);
    if (std::abs(denom) < 1e-12) continue;  // parallel
    const double t = (plane.origin - origin).dot(plane.normal) / denom;
    if (t < min_range) continue;
    if (best && t >= best->range) continue;
    const Vec3 p = origin + t * direction;
    const Vec2 uv = plane.to_local(p);
    if (!plane.inside(uv)) continue;
    best = RayHit{p, i, plane.temperature_at(uv), t};
  }
  return best;
}

// Surface temperature near a world point: the closest facet within max_dist.
inline std::optional<double> surface_temperature_near(const Vec3& p, const SceneModel& scene,
                                                      double max_dist) {
  std::optional<double> best;
  double best_dist = max_dist;
  for (const auto& plane : scene.planes) {
    const double dist = std::abs((p - plane.origin).dot(plane.normal));
    if (dist > best_dist) continue;
    const Vec2 uv = plane.to_local(p);
    if (!plane.inside(uv)) continue;
    best_dist = dist;
    best = plane.temperature_at(uv);
  }
  return best;
}

// Default verification scene: a room corner (two walls and a floor) plus two
// oblique interior panels that occlude parts of the walls. Patch temperatures
// span roughly 26-33 C.
inline SceneModel make_corner_scene() {
  SceneModel scene;
  const std::vector<Vec2> wall_poly = {{0, 0}, {6, 0}, {6, 4}, {0, 4}};
  const std::vector<Vec2> floor_poly = {{0, 0}, {6, 0}, {6, 6}, {0, 6}};
  const std::vector<Vec2> panel_poly = {{0, 0}, {1.6, 0}, {1.6, 2.2}, {0, 2.2}};

  // Wall A: x = 6 plane, faces -x.
  ScenePlane wall_a = make_plane(Vec3(6, -3, 0), Vec3(0, 1, 0), Vec3(0, 0, 1),
                                 wall_poly, 28.0, "wall_a");
  wall_a.patches = {{0.8, 0.4, 2.4, 1.8, 31.5}, {3.4, 1.9, 5.2, 3.4, 26.5},
                    {2.6, 2.4, 3.2, 3.0, 33.0}};
  // Wall B: y = 3 plane, faces -y.
  ScenePlane wall_b = make_plane(Vec3(6, 3, 0), Vec3(-1, 0, 0), Vec3(0, 0, 1),
                                 wall_poly, 27.0, "wall_b");
  wall_b.patches = {{0.6, 0.6, 2.2, 2.1, 30.0}, {3.0, 0.3, 5.4, 1.5, 32.0},
                    {2.5, 2.6, 4.0, 3.6, 26.0}};
  // Floor: z = -1.2 plane, faces +z.
  ScenePlane floor = make_plane(Vec3(6, -3, -1.2), Vec3(0, 1, 0), Vec3(-1, 0, 0),
                                floor_poly, 26.5, "floor");
  floor.patches = {{1.0, 1.0, 3.0, 2.5, 29.0}, {3.5, 3.0, 5.5, 5.0, 31.0}};

  // Oblique panels standing in the room, tilted, occluding wall patches.
  ScenePlane panel_a = make_plane(Vec3(3.6, -0.8, -1.0),
                                  Vec3(-0.35, 1.0, 0).normalized(), Vec3(0, 0, 1),
                                  panel_poly, 32.5, "panel_a");
  panel_a.patches = {{0.3, 0.5, 1.0, 1.4, 29.5}};
  ScenePlane panel_b = make_plane(Vec3(4.4, 1.6, -1.1),
                                  Vec3(0.85, -0.55, 0).normalized(),
                                  Vec3(0.12, 0, 1).normalized(), panel_poly, 27.5,
                                  "panel_b");
  panel_b.patches = {{0.5, 0.9, 1.3, 1.9, 30.5}};

  scene.planes = {wall_a, wall_b, floor, panel_a, panel_b};
  scene.validate();
  return scene;
}

}  // namespace thermolio::sim
