#pragma once

#include <functional>
#include <vector>

#include "thermolio/camera.hpp"
#include "thermolio/common.hpp"
#include "thermolio/edge_matching.hpp"
#include "thermolio/geometry.hpp"
#include "thermolio/lidar_noise.hpp"

namespace thermolio {

// Signed point-to-line distance in pixels: r = n^T (f(pi(T P)) - q_mean).
inline double extrinsic_residual(const EdgeCorrespondence& corr, const SE3& extrinsic,
                                 const Intrinsics& intr) {
  const Vec3 p_cam = extrinsic * corr.lidar_point;
  if (!(p_cam.z() > 0.0)) {
    throw std::domain_error("extrinsic_residual: point behind camera");
  }
  const Vec2 uv = project(p_cam, intr);
  return corr.image_edge.normal.dot(uv - corr.image_edge.q_mean);
}

struct ResidualLinearization {
  double r = 0.0;
  Eigen::Matrix<double, 1, 6> j_pose;    // d r / d [dtheta; dt], left perturbation
  Eigen::Matrix<double, 1, 5> j_noise;   // d r / d [lidar_w (3); image_w (2)]
  Eigen::Matrix<double, 5, 5> sigma;     // blockdiag(Sigma_L, pixel_sigma^2 I2)
  double noise_variance = 0.0;           // j_noise * sigma * j_noise^T
};

// First-order expansion of the point-on-edge constraint about the current
// extrinsic: 0 ~ r + J_T dT + J_w w, with w the stacked LiDAR point noise
// (3-dim, covariance from the beam noise model) and image pixel noise (2-dim,
// isotropic pixel_sigma^2).
inline ResidualLinearization residual_jacobians(const EdgeCorrespondence& corr,
                                                const SE3& extrinsic,
                                                const Intrinsics& intr,
                                                const LidarNoiseParams& noise) {
  const Vec3 p_cam = extrinsic * corr.lidar_point;
  if (!(p_cam.z() > 0.0)) {
    throw std::domain_error("residual_jacobians: point behind camera");
  }
  ResidualLinearization lin;
  const Vec2 uv = project(p_cam, intr);
  lin.r = corr.image_edge.normal.dot(uv - corr.image_edge.q_mean);

  const Mat23 d_uv_d_p = project_point_jacobian(p_cam, intr);
  const Eigen::Matrix<double, 1, 3> n_proj = corr.image_edge.normal.transpose() * d_uv_d_p;

  // Left perturbation Exp(dT) * T: dP/dtheta = -[P_cam x], dP/dt = I.
  lin.j_pose.leftCols<3>() = -n_proj * skew(p_cam);
  lin.j_pose.rightCols<3>() = n_proj;

  // LiDAR noise maps through the rotation; image noise enters with -n^T.
  lin.j_noise.leftCols<3>() = n_proj * extrinsic.R;
  lin.j_noise.rightCols<2>() = -corr.image_edge.normal.transpose();

  const double d = corr.lidar_point.norm();
  const Vec3 omega = corr.lidar_point / d;
  lin.sigma.setZero();
  lin.sigma.topLeftCorner<3, 3>() = point_covariance(omega, d, noise);
  lin.sigma.bottomRightCorner<2, 2>() =
      Mat2::Identity() * (noise.pixel_sigma * noise.pixel_sigma);
  lin.noise_variance = (lin.j_noise * lin.sigma * lin.j_noise.transpose())(0, 0);
  return lin;
}

struct ExtrinsicSolveOptions {
  int max_iters = 50;
  double step_tol = 1e-8;
  int rematch_every = 5;     // iterations between correspondence refreshes
  int max_halvings = 8;
  double condition_limit = 1e12;
  int min_correspondences = 6;
};

struct CalibrationSolution {
  SE3 extrinsic;
  int iterations = 0;
  double final_cost = 0.0;
  bool converged = false;
  std::vector<double> cost_trace;
  int dropped_behind_camera = 0;
  int correspondences_used = 0;
};

using RematchFn = std::function<std::vector<EdgeCorrespondence>(const SE3&)>;

namespace detail {

struct NormalEquations {
  Mat6 h = Mat6::Zero();
  Vec6 g = Vec6::Zero();
  double cost = 0.0;
  int used = 0;
  int behind = 0;
};

inline NormalEquations accumulate(const std::vector<EdgeCorrespondence>& corrs,
                                  const SE3& extrinsic, const Intrinsics& intr,
                                  const LidarNoiseParams& noise) {
  NormalEquations eq;
  for (const EdgeCorrespondence& corr : corrs) {
    if ((extrinsic * corr.lidar_point).z() <= 0.0) {
      ++eq.behind;
      continue;
    }
    const ResidualLinearization lin = residual_jacobians(corr, extrinsic, intr, noise);
    const double w = 1.0 / lin.noise_variance;
    eq.h.noalias() += w * lin.j_pose.transpose() * lin.j_pose;
    eq.g.noalias() += w * lin.j_pose.transpose() * lin.r;
    eq.cost += w * lin.r * lin.r;
    ++eq.used;
  }
  return eq;
}

inline double weighted_cost(const std::vector<EdgeCorrespondence>& corrs,
                            const SE3& extrinsic, const Intrinsics& intr,
                            const LidarNoiseParams& noise) {
  double cost = 0.0;
  for (const EdgeCorrespondence& corr : corrs) {
    if ((extrinsic * corr.lidar_point).z() <= 0.0) continue;
    const ResidualLinearization lin = residual_jacobians(corr, extrinsic, intr, noise);
    cost += lin.r * lin.r / lin.noise_variance;
  }
  return cost;
}

}  // namespace detail

// Noise-weighted MLE for the LiDAR-to-camera extrinsic. Each iteration solves
// dT* = -(J_T^T W J_T)^-1 J_T^T W r with per-correspondence scalar weights
// w_i = (J_w Sigma J_w^T)^-1, retracts with Exp(dT*) on the left, and
// optionally refreshes the correspondence set every rematch_every iterations.
inline CalibrationSolution solve_extrinsic(std::vector<EdgeCorrespondence> corrs,
                                           const SE3& initial_guess,
                                           const Intrinsics& intr,
                                           const LidarNoiseParams& noise,
                                           const ExtrinsicSolveOptions& opts = {},
                                           const RematchFn& rematch = nullptr) {
  CalibrationSolution sol;
  sol.extrinsic = initial_guess;
  int last_rematch_iter = 0;
  // Correspondences are "fresh" while the iterate has not moved since they
  // were last fit; convergence is only declared on fresh ones, because a set
  // fit at an earlier iterate linearizes the distorted image curves at the
  // wrong points and biases the optimum.
  bool corrs_fresh = true;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (rematch && iter > 0 && iter - last_rematch_iter >= opts.rematch_every) {
      corrs = rematch(sol.extrinsic);
      last_rematch_iter = iter;
      corrs_fresh = true;
    }
    const detail::NormalEquations eq =
        detail::accumulate(corrs, sol.extrinsic, intr, noise);
    sol.dropped_behind_camera += eq.behind;
    sol.correspondences_used = eq.used;
    if (eq.used < opts.min_correspondences) {
      throw DegenerateGeometryError(
          "solve_extrinsic: only " + std::to_string(eq.used) +
          " usable correspondences (need >= " +
          std::to_string(opts.min_correspondences) + ")");
    }

    Eigen::SelfAdjointEigenSolver<Mat6> eig(eq.h);
    const double lambda_min = eig.eigenvalues()(0);
    const double lambda_max = eig.eigenvalues()(5);
    if (!(lambda_min > 0.0) || lambda_max / lambda_min > opts.condition_limit) {
      throw DegenerateGeometryError(
          "solve_extrinsic: degenerate edge geometry (normal-equation condition "
          "number exceeds limit; edges must span multiple directions and the FoV)");
    }

    Vec6 step = eq.h.ldlt().solve(-eq.g);
    sol.cost_trace.push_back(eq.cost);

    // Halve the step while it does not reduce the weighted cost.
    double cost_new = 0.0;
    SE3 candidate;
    bool improved = false;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      candidate = se3_exp(step) * sol.extrinsic;
      cost_new = detail::weighted_cost(corrs, candidate, intr, noise);
      if (cost_new <= eq.cost) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    sol.iterations = iter + 1;
    if (!improved) {
      // Stalled on the current correspondence set; refresh before concluding.
      if (rematch && !corrs_fresh) {
        corrs = rematch(sol.extrinsic);
        last_rematch_iter = iter;
        corrs_fresh = true;
        continue;
      }
      sol.final_cost = eq.cost;
      sol.converged = step.norm() < opts.step_tol;
      return sol;
    }
    sol.extrinsic = candidate;
    sol.final_cost = cost_new;
    if (step.norm() < opts.step_tol) {
      if (rematch && !corrs_fresh) {
        corrs = rematch(sol.extrinsic);
        last_rematch_iter = iter;
        corrs_fresh = true;
        continue;
      }
      sol.converged = true;
      return sol;
    }
    corrs_fresh = false;
  }
  sol.converged = false;
  return sol;
}

}  // namespace thermolio
