#pragma once

#include <array>
#include <cmath>

#include "thermolio/common.hpp"

namespace thermolio {

// Brown-Conrady coefficients [k1, k2, p1, p2, k3].
struct Distortion {
  double k1 = 0.0, k2 = 0.0, p1 = 0.0, p2 = 0.0, k3 = 0.0;

  std::array<double, 5> as_array() const { return {k1, k2, p1, p2, k3}; }
  static Distortion from_array(const std::array<double, 5>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }
  bool is_zero() const {
    return k1 == 0.0 && k2 == 0.0 && p1 == 0.0 && p2 == 0.0 && k3 == 0.0;
  }
};

struct Intrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  double skew = 0.0;
  Distortion dist;
  int width = 0;   // 0 means unbound
  int height = 0;

  bool has_size() const { return width > 0 && height > 0; }
};

// Radial + tangential distortion of normalized coordinates.
inline Vec2 distort(const Vec2& xy, const Distortion& d) {
  const double x = xy.x(), y = xy.y();
  const double r2 = x * x + y * y;
  const double s = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
  return Vec2(x * s + 2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x),
              y * s + d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y);
}

inline Mat2 distort_jacobian(const Vec2& xy, const Distortion& d) {
  const double x = xy.x(), y = xy.y();
  const double r2 = x * x + y * y;
  const double s = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
  const double g = d.k1 + 2.0 * d.k2 * r2 + 3.0 * d.k3 * r2 * r2;  // ds/dr2
  Mat2 j;
  j(0, 0) = s + 2.0 * x * x * g + 2.0 * d.p1 * y + 6.0 * d.p2 * x;
  j(0, 1) = 2.0 * x * y * g + 2.0 * d.p1 * x + 2.0 * d.p2 * y;
  j(1, 0) = 2.0 * x * y * g + 2.0 * d.p1 * x + 2.0 * d.p2 * y;
  j(1, 1) = s + 2.0 * y * y * g + 6.0 * d.p1 * y + 2.0 * d.p2 * x;
  return j;
}

// Invert the distortion by fixed-point iteration. Throws SolverError when the
// iteration fails to contract within max_iters.
inline Vec2 undistort(const Vec2& xy_distorted, const Distortion& d,
                      int max_iters = 50, double tol = 1e-10) {
  if (d.is_zero()) return xy_distorted;
  Vec2 xy = xy_distorted;
  for (int i = 0; i < max_iters; ++i) {
    const double x = xy.x(), y = xy.y();
    const double r2 = x * x + y * y;
    const double s = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
    const Vec2 tangential(2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x),
                          d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y);
    const Vec2 next = (xy_distorted - tangential) / s;
    if (!next.allFinite()) {
      throw SolverError("undistort: iteration diverged");
    }
    const double step = (next - xy).norm();
    xy = next;
    if (step < tol) {
      if ((distort(xy, d) - xy_distorted).norm() > 1e-8) break;
      return xy;
    }
  }
  if ((distort(xy, d) - xy_distorted).norm() <= 1e-8) return xy;
  throw SolverError("undistort: no convergence after max iterations");
}

// Map pixel coordinates of the distorted normalized point through K.
inline Vec2 apply_k(const Vec2& xyd, const Intrinsics& intr) {
  return Vec2(intr.fx * xyd.x() + intr.skew * xyd.y() + intr.cx,
              intr.fy * xyd.y() + intr.cy);
}

// Full projection: normalize, distort, apply K. Requires a point in front of
// the camera (z > 0).
inline Vec2 project(const Vec3& p_cam, const Intrinsics& intr) {
  if (!(p_cam.z() > 0.0)) {
    throw std::domain_error("project: point behind camera");
  }
  const Vec2 xy(p_cam.x() / p_cam.z(), p_cam.y() / p_cam.z());
  return apply_k(distort(xy, intr.dist), intr);
}

// d(pixel)/d(P_cam), the chain K' * D_distort * D_perspective. 2x3.
inline Mat23 project_point_jacobian(const Vec3& p_cam, const Intrinsics& intr) {
  const double z_inv = 1.0 / p_cam.z();
  const Vec2 xy(p_cam.x() * z_inv, p_cam.y() * z_inv);
  Mat23 d_pi;
  d_pi << z_inv, 0.0, -xy.x() * z_inv,
          0.0, z_inv, -xy.y() * z_inv;
  Mat2 k;
  k << intr.fx, intr.skew, 0.0, intr.fy;
  return k * distort_jacobian(xy, intr.dist) * d_pi;
}

// d(pixel)/d[fx, fy, cx, cy, skew, k1, k2, p1, p2, k3]. 2x10.
inline Eigen::Matrix<double, 2, 10> project_param_jacobian(const Vec3& p_cam,
                                                           const Intrinsics& intr) {
  const Vec2 xy(p_cam.x() / p_cam.z(), p_cam.y() / p_cam.z());
  const double x = xy.x(), y = xy.y();
  const double r2 = x * x + y * y;
  const Vec2 xyd = distort(xy, intr.dist);
  Eigen::Matrix<double, 2, 10> j = Eigen::Matrix<double, 2, 10>::Zero();
  j(0, 0) = xyd.x();  // fx
  j(1, 1) = xyd.y();  // fy
  j(0, 2) = 1.0;      // cx
  j(1, 3) = 1.0;      // cy
  j(0, 4) = xyd.y();  // skew
  // Distortion enters pixels through K; du = fx*dx' + skew*dy', dv = fy*dy'.
  const Vec2 dk1(x * r2, y * r2);
  const Vec2 dk2(x * r2 * r2, y * r2 * r2);
  const Vec2 dk3(x * r2 * r2 * r2, y * r2 * r2 * r2);
  const Vec2 dp1(2.0 * x * y, r2 + 2.0 * y * y);
  const Vec2 dp2(r2 + 2.0 * x * x, 2.0 * x * y);
  const Vec2 cols[5] = {dk1, dk2, dp1, dp2, dk3};
  for (int c = 0; c < 5; ++c) {
    j(0, 5 + c) = intr.fx * cols[c].x() + intr.skew * cols[c].y();
    j(1, 5 + c) = intr.fy * cols[c].y();
  }
  return j;
}

// Unit ray in the camera frame through a pixel (inverse of project).
inline Vec3 pixel_to_ray(const Vec2& uv, const Intrinsics& intr) {
  const double yd = (uv.y() - intr.cy) / intr.fy;
  const double xd = (uv.x() - intr.cx - intr.skew * yd) / intr.fx;
  const Vec2 xy = undistort(Vec2(xd, yd), intr.dist);
  return Vec3(xy.x(), xy.y(), 1.0).normalized();
}

inline bool pixel_in_image(const Vec2& uv, const Intrinsics& intr, double border = 0.0) {
  return uv.x() >= border && uv.x() <= intr.width - 1.0 - border &&
         uv.y() >= border && uv.y() <= intr.height - 1.0 - border;
}

}  // namespace thermolio
