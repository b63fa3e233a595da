#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"
#include "thermolio/geometry.hpp"

using namespace thermolio;
using test_support::random_unit;

namespace {

// Truncated matrix-exponential series, the independent oracle for so3_exp.
Mat3 matrix_exp_series(const Mat3& a, int terms = 20) {
  Mat3 sum = Mat3::Identity();
  Mat3 term = Mat3::Identity();
  for (int k = 1; k <= terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

}  // namespace

TEST_CASE("skew matrix reproduces the cross product") {
  CHECK(skew(Vec3::Zero()).isZero(0.0));
  CHECK((skew(Vec3(1, 0, 0)) * Vec3(0, 1, 0) - Vec3(0, 0, 1)).norm() == 0.0);

  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const Vec3 v = rng.normal3();
    const Vec3 w = rng.normal3();
    CHECK((skew(v) * w - v.cross(w)).norm() < 1e-15 * (1.0 + v.norm() * w.norm()));
  }
}

TEST_CASE("so3_exp matches the series oracle and basic cases") {
  CHECK(so3_exp(Vec3::Zero()).isIdentity(0.0));

  const Mat3 quarter = so3_exp(Vec3(0, 0, kPi / 2));
  CHECK((quarter * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() < 1e-14);

  Rng rng(11);
  for (int i = 0; i < 30; ++i) {
    const Vec3 v = random_unit(rng) * 0.3;
    const Mat3 oracle = matrix_exp_series(skew(v));
    CHECK((so3_exp(v) - oracle).norm() < 1e-12);
  }
}

TEST_CASE("so3 log/exp round trip below pi") {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const Vec3 v = random_unit(rng) * rng.uniform(0.0, kPi - 1e-3);
    CHECK((so3_log(so3_exp(v)) - v).norm() < 1e-9);
  }
  // Tiny-angle branch
  const Vec3 tiny(1e-10, -2e-10, 3e-11);
  CHECK((so3_log(so3_exp(tiny)) - tiny).norm() < 1e-15);
}

TEST_CASE("so3_exp output is a rotation matrix") {
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    const Mat3 r = so3_exp(rng.normal3());
    CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-10);
    CHECK(std::abs(r.determinant() - 1.0) < 1e-10);
  }
}

TEST_CASE("se3_exp places rotation and translation per the update rule") {
  CHECK(se3_exp(Vec6::Zero()).R.isIdentity(0.0));
  CHECK(se3_exp(Vec6::Zero()).t.isZero(0.0));

  Vec6 pure_trans;
  pure_trans << 0, 0, 0, 1, 2, 3;
  const SE3 t = se3_exp(pure_trans);
  CHECK(t.R.isIdentity(0.0));
  CHECK((t.t - Vec3(1, 2, 3)).norm() == 0.0);

  Vec6 rot_only;
  rot_only << 0.1, 0, 0, 0, 0, 0;
  const SE3 r = se3_exp(rot_only);
  CHECK((r * Vec3(0, 1, 0) - so3_exp(Vec3(0.1, 0, 0)) * Vec3(0, 1, 0)).norm() < 1e-15);
}

TEST_CASE("se3 composition is associative and inverse cancels") {
  Rng rng(19);
  for (int i = 0; i < 50; ++i) {
    const SE3 t1 = test_support::random_se3(rng);
    const SE3 t2 = test_support::random_se3(rng);
    const Vec3 p = rng.normal3() * 5.0;
    CHECK(((t1 * t2) * p - t1 * (t2 * p)).norm() < 1e-10);

    const SE3 id = t1 * t1.inverse();
    CHECK((id.R - Mat3::Identity()).norm() < 1e-9);
    CHECK(id.t.norm() < 1e-9);
  }
}

TEST_CASE("tangent_basis is orthonormal and orthogonal to omega") {
  const Mat32 n_pole = tangent_basis(Vec3(0, 0, 1));
  CHECK(std::abs(n_pole.col(0).z()) < 1e-14);
  CHECK(std::abs(n_pole.col(1).z()) < 1e-14);

  CHECK((tangent_basis(Vec3(1, 0, 0)).transpose() * Vec3(1, 0, 0)).norm() < 1e-14);

  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    const Vec3 omega = random_unit(rng);
    const Mat32 n = tangent_basis(omega);
    CHECK((n.transpose() * n - Mat2::Identity()).norm() < 1e-12);
    CHECK((n.transpose() * omega).norm() < 1e-12);
  }
}

TEST_CASE("boxplus_s2 stays on the sphere and matches its definition") {
  CHECK((boxplus_s2(Vec3(0, 0, 1), Vec2::Zero()) - Vec3(0, 0, 1)).norm() == 0.0);

  const Vec3 small = boxplus_s2(Vec3(0, 0, 1), Vec2(1e-4, -2e-4));
  CHECK(std::abs(small.norm() - 1.0) < 1e-12);

  // Composition oracle: lift through the tangent basis, rotate.
  const Vec3 omega(1, 0, 0);
  const Vec2 delta(0.2, -0.1);
  const Vec3 expected = so3_exp(tangent_basis(omega) * delta) * omega;
  CHECK((boxplus_s2(omega, delta) - expected).norm() == 0.0);

  Rng rng(29);
  for (int i = 0; i < 100; ++i) {
    const Vec3 w = random_unit(rng);
    const Vec2 d = rng.normal2() * 0.5;
    CHECK(std::abs(boxplus_s2(w, d).norm() - 1.0) < 1e-12);
  }

  CHECK_THROWS_AS(boxplus_s2(Vec3(1, 1, 0), Vec2(0.1, 0.1)), std::invalid_argument);
}

TEST_CASE("boxplus_s2 Jacobian at zero equals -[omega x] N(omega)") {
  Rng rng(31);
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const Vec3 omega = random_unit(rng);
    const Mat32 n = tangent_basis(omega);
    const Mat32 analytic = -skew(omega) * n;
    for (int c = 0; c < 2; ++c) {
      Vec2 dp = Vec2::Zero(), dm = Vec2::Zero();
      dp[c] = h;
      dm[c] = -h;
      const Vec3 fd = (boxplus_s2(omega, dp) - boxplus_s2(omega, dm)) / (2.0 * h);
      CHECK((fd - analytic.col(c)).norm() < 1e-5 * std::max(1.0, analytic.col(c).norm()));
    }
  }
}
