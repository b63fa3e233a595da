#include <chrono>

#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"
#include "thermolio/imu.hpp"

using namespace thermolio;
using test_support::random_rotation;
using test_support::random_unit;

namespace {

NavState random_state(Rng& rng) {
  NavState x;
  x.R = random_rotation(rng);
  x.p = rng.normal3() * 3.0;
  x.v = rng.normal3() * 0.8;
  x.bg = rng.normal3() * 0.01;
  x.ba = rng.normal3() * 0.05;
  x.g = Vec3(0, 0, -9.81) + rng.normal3() * 0.05;
  return x;
}

ImuSample random_imu(Rng& rng) {
  ImuSample u;
  u.t = 0.0;
  u.angular_rate = rng.normal3() * 0.5;
  u.specific_force = rng.normal3() * 2.0 + Vec3(0, 0, 9.81);
  return u;
}

// Noisy propagate used by the F_w finite-difference oracle: white noise
// subtracts from the measurement, bias random-walk increments add at the end.
NavState propagate_with_noise(const NavState& x, const ImuSample& u, double dt,
                              const VecX& w) {
  ImuSample noisy = u;
  noisy.angular_rate -= w.segment<3>(0);
  noisy.specific_force -= w.segment<3>(3);
  NavState out = propagate_state(x, noisy, dt);
  out.bg += w.segment<3>(6);
  out.ba += w.segment<3>(9);
  return out;
}

}  // namespace

TEST_CASE("stationary equilibrium leaves the state unchanged") {
  Rng rng(801);
  NavState x;
  x.R = random_rotation(rng);
  x.p = Vec3(1, 2, 3);
  ImuSample u;
  u.angular_rate = Vec3::Zero();
  u.specific_force = -x.R.transpose() * x.g;
  const NavState next = propagate_state(x, u, 0.01);
  CHECK((next.R - x.R).norm() < 1e-12);
  CHECK((next.p - x.p).norm() < 1e-12);
  CHECK(next.v.norm() < 1e-12);
}

TEST_CASE("constant acceleration integrates the exact kinematics") {
  NavState x;
  x.g = Vec3::Zero();
  ImuSample u;
  u.angular_rate = Vec3::Zero();
  u.specific_force = Vec3(0.7, 0, 0);
  const double dt = 0.005;
  const int n = 2000;
  for (int i = 0; i < n; ++i) x = propagate_state(x, u, dt);
  const double t = n * dt;
  CHECK(x.p.x() == Catch::Approx(0.5 * 0.7 * t * t).epsilon(1e-12));
  CHECK(x.v.x() == Catch::Approx(0.7 * t).epsilon(1e-12));
}

TEST_CASE("propagate rejects invalid steps") {
  NavState x;
  ImuSample u;
  CHECK_THROWS_AS(propagate_state(x, u, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(propagate_state(x, u, -0.01), std::invalid_argument);
  CHECK_THROWS_AS(propagate_state(x, u, 0.2), std::invalid_argument);
}

TEST_CASE("error-state transition Jacobian matches finite differences") {
  Rng rng(803);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const NavState x = random_state(rng);
    const ImuSample u = random_imu(rng);
    const double dt = rng.uniform(0.002, 0.01);

    Eigen::Matrix<double, 18, 18> f_x;
    Eigen::Matrix<double, 18, 12> f_w;
    propagate_jacobians(x, u, dt, f_x, f_w);
    const NavState base = propagate_state(x, u, dt);

    for (int c = 0; c < 18; ++c) {
      VecX dp = VecX::Zero(18), dm = VecX::Zero(18);
      dp[c] = h;
      dm[c] = -h;
      const VecX fd = (nav_boxminus(propagate_state(nav_boxplus(x, dp), u, dt), base) -
                       nav_boxminus(propagate_state(nav_boxplus(x, dm), u, dt), base)) /
                      (2.0 * h);
      const VecX analytic = f_x.col(c);
      CHECK((fd - analytic).norm() < 1e-4 * std::max(1.0, fd.norm()));
    }
    for (int c = 0; c < 12; ++c) {
      VecX wp = VecX::Zero(12), wm = VecX::Zero(12);
      wp[c] = h;
      wm[c] = -h;
      const VecX fd = (nav_boxminus(propagate_with_noise(x, u, dt, wp), base) -
                       nav_boxminus(propagate_with_noise(x, u, dt, wm), base)) /
                      (2.0 * h);
      const VecX analytic = f_w.col(c);
      CHECK((fd - analytic).norm() < 1e-4 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("covariance propagation basics") {
  Rng rng(805);
  const NavState x = random_state(rng);
  const ImuSample u = random_imu(rng);

  // Q = 0, tiny dt: P essentially unchanged.
  MatX p = MatX::Identity(18, 18) * 0.01;
  const MatX p_next =
      propagate_covariance(p, x, u, 1e-9, Eigen::Matrix<double, 12, 12>::Zero());
  CHECK((p_next - p).norm() < 1e-9);

  // P = 0: one step gives exactly F_w Q F_w^T.
  const auto q = process_noise(ImuNoiseParams{}, 0.005);
  const MatX p0 = MatX::Zero(15, 15);
  const MatX p1 = propagate_covariance(p0, x, u, 0.005, q);
  Eigen::Matrix<double, 18, 18> f_x;
  Eigen::Matrix<double, 18, 12> f_w;
  propagate_jacobians(x, u, 0.005, f_x, f_w);
  const MatX expected = f_w.topRows(15) * q * f_w.topRows(15).transpose();
  CHECK((p1 - expected).norm() < 1e-15);

  // Non-PSD input rejected.
  MatX bad = MatX::Identity(15, 15);
  bad(0, 0) = -1.0;
  CHECK_THROWS_AS(propagate_covariance(bad, x, u, 0.005, q), ValidationError);
  MatX asym = MatX::Identity(15, 15);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(propagate_covariance(asym, x, u, 0.005, q), ValidationError);
}

TEST_CASE("covariance stays symmetric PSD over many steps") {
  Rng rng(807);
  NavState x = random_state(rng);
  MatX p = MatX::Identity(15, 15) * 1e-4;
  const auto q = process_noise(ImuNoiseParams{}, 0.005);
  for (int i = 0; i < 500; ++i) {
    ImuSample u = random_imu(rng);
    p = propagate_covariance(p, x, u, 0.005, q);
    x = propagate_state(x, u, 0.005);
  }
  CHECK((p - p.transpose()).norm() < 1e-12 * p.norm());
  Eigen::SelfAdjointEigenSolver<MatX> eig(p);
  CHECK(eig.eigenvalues()(0) >= -1e-9);
}

TEST_CASE("rotation stays orthonormal across 1e5 steps with periodic cleanup") {
  Rng rng(809);
  NavState x;
  ImuSample u;
  u.angular_rate = Vec3(0.3, -0.2, 0.5);
  u.specific_force = Vec3(0, 0, 9.81);
  x.g = Vec3(0, 0, -9.81);
  for (int i = 0; i < 100000; ++i) {
    x = propagate_state(x, u, 0.001);
    if ((i + 1) % 1000 == 0) x.R = orthonormalize(x.R);
  }
  CHECK((x.R.transpose() * x.R - Mat3::Identity()).norm() < 1e-8);
}

TEST_CASE("propagation cost is constant per sample") {
  Rng rng(811);
  NavState x = random_state(rng);
  const ImuSample u = random_imu(rng);
  auto run = [&](int n) {
    NavState s = x;
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < n; ++i) s = propagate_state(s, u, 0.005);
    const auto stop = std::chrono::steady_clock::now();
    volatile double sink = s.p.x();
    (void)sink;
    return std::chrono::duration<double>(stop - start).count();
  };
  run(20000);  // warm up
  const double t1 = run(20000);
  const double t10 = run(200000);
  CHECK(t10 <= 12.0 * std::max(t1, 1e-9));
}
