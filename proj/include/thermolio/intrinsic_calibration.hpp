#pragma once

#include <vector>

#include <Eigen/Dense>

#include "thermolio/camera.hpp"
#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"

namespace thermolio {

// One planar-target view: board corners (Z=0 plane, meters) and their pixels.
struct PlanarObservation {
  std::vector<Vec2> board_points;
  std::vector<Vec2> image_points;
};

struct IntrinsicCalibrationOptions {
  bool estimate_skew = false;
  double lm_lambda0 = 1e-3;
  int max_iters = 100;
  double step_tol = 1e-10;
  // On the column-equilibrated conic system; healthy view sets sit well below
  // 100, fronto-parallel sets exceed 1e5.
  double condition_limit = 1e4;
};

struct IntrinsicCalibrationResult {
  Intrinsics intrinsics;
  std::vector<SE3> view_poses;        // board -> camera
  double initial_rms = 0.0;           // px per residual coordinate, closed form
  double reprojection_rms = 0.0;      // px per residual coordinate, refined
  int iterations = 0;
  std::vector<double> cost_trace;     // sum of squared residuals per accepted step
  VecX gradient;                      // J^T r at the reported optimum
};

namespace detail {

// Normalized DLT homography board(X,Y) -> image(u,v).
inline Mat3 fit_homography(const std::vector<Vec2>& src, const std::vector<Vec2>& dst) {
  const int n = static_cast<int>(src.size());
  if (n < 4) throw ValidationError("fit_homography: need at least 4 points");

  auto normalizer = [](const std::vector<Vec2>& pts) {
    Vec2 mean = Vec2::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    double dist = 0.0;
    for (const auto& p : pts) dist += (p - mean).norm();
    dist /= static_cast<double>(pts.size());
    const double s = dist > 1e-12 ? std::sqrt(2.0) / dist : 1.0;
    Mat3 t = Mat3::Identity();
    t(0, 0) = s;
    t(1, 1) = s;
    t(0, 2) = -s * mean.x();
    t(1, 2) = -s * mean.y();
    return t;
  };
  const Mat3 ts = normalizer(src);
  const Mat3 td = normalizer(dst);

  MatX a(2 * n, 9);
  for (int i = 0; i < n; ++i) {
    const Vec3 p = ts * Vec3(src[i].x(), src[i].y(), 1.0);
    const Vec3 q = td * Vec3(dst[i].x(), dst[i].y(), 1.0);
    a.row(2 * i) << -p.x(), -p.y(), -1.0, 0.0, 0.0, 0.0,
        q.x() * p.x(), q.x() * p.y(), q.x();
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, -p.x(), -p.y(), -1.0,
        q.y() * p.x(), q.y() * p.y(), q.y();
  }
  Eigen::JacobiSVD<MatX> svd(a, Eigen::ComputeThinV);
  const VecX h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Mat3 hom = td.inverse() * hn * ts;
  if (std::abs(hom(2, 2)) > 1e-12) hom /= hom(2, 2);
  return hom;
}

inline Eigen::Matrix<double, 6, 1> zhang_v(const Mat3& h, int i, int j) {
  Eigen::Matrix<double, 6, 1> v;
  v << h(0, i) * h(0, j),
      h(0, i) * h(1, j) + h(1, i) * h(0, j),
      h(1, i) * h(1, j),
      h(2, i) * h(0, j) + h(0, i) * h(2, j),
      h(2, i) * h(1, j) + h(1, i) * h(2, j),
      h(2, i) * h(2, j);
  return v;
}

// Closed-form intrinsics from the absolute-conic constraints of the
// homographies (orthonormality of the first two rotation columns).
inline Intrinsics solve_intrinsics_closed_form(const std::vector<Mat3>& homographies,
                                               double condition_limit) {
  const int m = static_cast<int>(homographies.size());
  MatX v(2 * m, 6);
  for (int i = 0; i < m; ++i) {
    v.row(2 * i) = zhang_v(homographies[i], 0, 1).transpose();
    v.row(2 * i + 1) =
        (zhang_v(homographies[i], 0, 0) - zhang_v(homographies[i], 1, 1)).transpose();
  }
  // Degeneracy test runs on the column-equilibrated system (raw columns mix
  // units, px^0..px^2); the solution itself comes from the raw system.
  {
    MatX v_eq = v;
    for (int c = 0; c < 6; ++c) {
      const double scale = v_eq.col(c).norm();
      if (scale > 0.0) v_eq.col(c) /= scale;
    }
    Eigen::JacobiSVD<MatX> svd_eq(v_eq);
    const VecX sv = svd_eq.singularValues();
    if (!(sv(4) > 0.0) || sv(0) / sv(4) > condition_limit) {
      throw DegenerateGeometryError(
          "calibrate_intrinsics: view set is degenerate (coplanar or parallel views)");
    }
  }
  Eigen::JacobiSVD<MatX> svd(v, Eigen::ComputeThinV);
  VecX b = svd.matrixV().col(5);
  if (b(0) < 0.0) b = -b;  // B = K^-T K^-1 is positive definite up to scale

  const double b11 = b(0), b12 = b(1), b22 = b(2), b13 = b(3), b23 = b(4), b33 = b(5);
  const double denom = b11 * b22 - b12 * b12;
  if (!(denom > 0.0)) {
    throw DegenerateGeometryError("calibrate_intrinsics: conic solution not definite");
  }
  const double v0 = (b12 * b13 - b11 * b23) / denom;
  const double lambda = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11;
  if (!(lambda > 0.0) || !(lambda / b11 > 0.0)) {
    throw DegenerateGeometryError("calibrate_intrinsics: conic solution not definite");
  }
  Intrinsics intr;
  intr.fy = std::sqrt(lambda * b11 / denom);
  intr.fx = std::sqrt(lambda / b11);
  intr.skew = -b12 * intr.fx * intr.fx * intr.fy / lambda;
  intr.cy = v0;
  intr.cx = intr.skew * v0 / intr.fy - b13 * intr.fx * intr.fx / lambda;
  return intr;
}

inline SE3 pose_from_homography(const Mat3& h, const Intrinsics& intr) {
  Mat3 k;
  k << intr.fx, intr.skew, intr.cx, 0.0, intr.fy, intr.cy, 0.0, 0.0, 1.0;
  const Mat3 kinv = k.inverse();
  Vec3 r1 = kinv * h.col(0);
  Vec3 r2 = kinv * h.col(1);
  Vec3 t = kinv * h.col(2);
  const double scale = 2.0 / (r1.norm() + r2.norm());
  r1 *= scale;
  r2 *= scale;
  t *= scale;
  if (t.z() < 0.0) {  // board must sit in front of the camera
    r1 = -r1;
    r2 = -r2;
    t = -t;
  }
  Mat3 r;
  r.col(0) = r1;
  r.col(1) = r2;
  r.col(2) = r1.cross(r2);
  return SE3(orthonormalize(r), t);
}

}  // namespace detail

// Zhang-style planar calibration: per-view DLT homographies, closed-form K,
// pose recovery, then joint damped Gauss-Newton refinement of intrinsics,
// distortion (initialized at zero) and per-view poses.
inline IntrinsicCalibrationResult calibrate_intrinsics(
    const std::vector<PlanarObservation>& views,
    const IntrinsicCalibrationOptions& opts = {}) {
  if (views.size() < 3) {
    throw ValidationError("calibrate_intrinsics: need at least 3 views, got " +
                          std::to_string(views.size()));
  }
  int total_points = 0;
  for (const auto& view : views) {
    if (view.board_points.size() != view.image_points.size()) {
      throw ValidationError("calibrate_intrinsics: board/image point count mismatch");
    }
    if (view.board_points.size() < 4) {
      throw ValidationError("calibrate_intrinsics: each view needs >= 4 points");
    }
    total_points += static_cast<int>(view.board_points.size());
  }

  std::vector<Mat3> homographies;
  homographies.reserve(views.size());
  for (const auto& view : views) {
    homographies.push_back(detail::fit_homography(view.board_points, view.image_points));
  }

  IntrinsicCalibrationResult result;
  result.intrinsics = detail::solve_intrinsics_closed_form(homographies, opts.condition_limit);
  if (!opts.estimate_skew) result.intrinsics.skew = 0.0;
  for (const auto& h : homographies) {
    result.view_poses.push_back(detail::pose_from_homography(h, result.intrinsics));
  }

  const int n_views = static_cast<int>(views.size());
  const int n_intr = opts.estimate_skew ? 10 : 9;  // fx fy cx cy (skew) k1 k2 p1 p2 k3
  const int n_params = n_intr + 6 * n_views;
  const int n_res = 2 * total_points;

  auto residuals_of = [&](const Intrinsics& intr, const std::vector<SE3>& poses, VecX& r) {
    r.resize(n_res);
    int row = 0;
    for (int v = 0; v < n_views; ++v) {
      for (std::size_t i = 0; i < views[v].board_points.size(); ++i) {
        const Vec2& bp = views[v].board_points[i];
        const Vec3 p_cam = poses[v] * Vec3(bp.x(), bp.y(), 0.0);
        const Vec2 uv = project(p_cam, intr);
        r.segment<2>(row) = uv - views[v].image_points[i];
        row += 2;
      }
    }
  };

  // Rows are reprojection residuals; columns are [fx fy cx cy (skew) k1 k2 p1
  // p2 k3] then six pose parameters per view. Pose perturbation is
  // left-multiplicative: P' = Exp(dtheta)*(R p + t) + dt.
  auto fill_jacobian = [&](const Intrinsics& intr, const std::vector<SE3>& poses, MatX& jac) {
    jac.setZero();
    int row = 0;
    for (int v = 0; v < n_views; ++v) {
      for (std::size_t i = 0; i < views[v].board_points.size(); ++i) {
        const Vec2& bp = views[v].board_points[i];
        const Vec3 p_cam = poses[v] * Vec3(bp.x(), bp.y(), 0.0);
        const Mat23 d_uv_d_p = project_point_jacobian(p_cam, intr);
        const Eigen::Matrix<double, 2, 10> d_uv_d_intr = project_param_jacobian(p_cam, intr);
        jac.block<2, 4>(row, 0) = d_uv_d_intr.block<2, 4>(0, 0);
        int col = 4;
        if (opts.estimate_skew) jac.block<2, 1>(row, col++) = d_uv_d_intr.col(4);
        jac.block<2, 5>(row, col) = d_uv_d_intr.block<2, 5>(0, 5);
        const int pc = n_intr + 6 * v;
        jac.block<2, 3>(row, pc) = d_uv_d_p * (-skew(p_cam));
        jac.block<2, 3>(row, pc + 3) = d_uv_d_p;
        row += 2;
      }
    }
  };

  VecX r;
  residuals_of(result.intrinsics, result.view_poses, r);
  result.initial_rms = std::sqrt(r.squaredNorm() / n_res);

  // Damped Gauss-Newton on the joint reprojection objective.
  Intrinsics intr = result.intrinsics;
  std::vector<SE3> poses = result.view_poses;
  double lambda = opts.lm_lambda0;
  double cost = r.squaredNorm();
  result.cost_trace.push_back(cost);

  MatX jac(n_res, n_params);
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    fill_jacobian(intr, poses, jac);
    const MatX jtj = jac.transpose() * jac;
    const VecX jtr = jac.transpose() * r;
    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      MatX damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const VecX step = damped.ldlt().solve(-jtr);

      Intrinsics intr_new = intr;
      intr_new.fx += step(0);
      intr_new.fy += step(1);
      intr_new.cx += step(2);
      intr_new.cy += step(3);
      int col = 4;
      if (opts.estimate_skew) intr_new.skew += step(col++);
      intr_new.dist.k1 += step(col + 0);
      intr_new.dist.k2 += step(col + 1);
      intr_new.dist.p1 += step(col + 2);
      intr_new.dist.p2 += step(col + 3);
      intr_new.dist.k3 += step(col + 4);
      std::vector<SE3> poses_new = poses;
      for (int v = 0; v < n_views; ++v) {
        const auto d = step.segment<6>(n_intr + 6 * v);
        poses_new[v] = se3_exp(d) * poses[v];
      }

      VecX r_new;
      residuals_of(intr_new, poses_new, r_new);
      const double cost_new = r_new.squaredNorm();
      if (cost_new <= cost) {
        intr = intr_new;
        poses = std::move(poses_new);
        r = std::move(r_new);
        cost = cost_new;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        result.cost_trace.push_back(cost);
        result.iterations = iter + 1;
        if (step.norm() < opts.step_tol) iter = opts.max_iters;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) break;
  }

  result.intrinsics = intr;
  result.intrinsics.width = 0;
  result.intrinsics.height = 0;
  result.view_poses = poses;
  result.reprojection_rms = std::sqrt(cost / n_res);
  fill_jacobian(intr, poses, jac);
  result.gradient = jac.transpose() * r;
  return result;
}

}  // namespace thermolio
