#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"
#include "thermolio/kdtree.hpp"

using namespace thermolio;

namespace {

template <int Dim>
std::vector<int> brute_force_knn(const std::vector<Eigen::Matrix<double, Dim, 1>>& pts,
                                 const Eigen::Matrix<double, Dim, 1>& q, int k) {
  std::vector<std::pair<double, int>> d;
  d.reserve(pts.size());
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    d.emplace_back((pts[i] - q).squaredNorm(), i);
  }
  std::sort(d.begin(), d.end());
  std::vector<int> idx;
  for (int i = 0; i < std::min<int>(k, d.size()); ++i) idx.push_back(d[i].second);
  return idx;
}

}  // namespace

TEST_CASE("kd-tree matches brute force on clouds up to 5000 points") {
  Rng rng(101);
  for (int trial = 0; trial < 3; ++trial) {
    const int n = trial == 0 ? 17 : (trial == 1 ? 1000 : 5000);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = rng.normal3() * 10.0;
    KdTree3 tree(pts);

    std::vector<int> idx;
    std::vector<double> d2;
    for (int q = 0; q < 50; ++q) {
      const Vec3 query = rng.normal3() * 10.0;
      const int k = 1 + (q % 8);
      tree.knn(query, k, idx, d2);
      const auto expected = brute_force_knn<3>(pts, query, k);
      REQUIRE(idx.size() == expected.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        // Compare by distance: ties may order differently.
        CHECK((pts[idx[i]] - query).squaredNorm() ==
              Catch::Approx((pts[expected[i]] - query).squaredNorm()).margin(1e-12));
      }
      // Returned distances are ascending and consistent.
      for (std::size_t i = 0; i < idx.size(); ++i) {
        CHECK(d2[i] == Catch::Approx((pts[idx[i]] - query).squaredNorm()));
        if (i > 0) CHECK(d2[i] >= d2[i - 1]);
      }
    }
  }
}

TEST_CASE("kd-tree 2d queries and edge cases") {
  std::vector<Vec2> pts = {{0, 0}, {1, 0}, {0, 1}, {5, 5}};
  KdTree2 tree(pts);
  CHECK(tree.nearest(Vec2(0.1, 0.1)) == 0);
  CHECK(tree.nearest(Vec2(4.9, 5.2)) == 3);

  std::vector<int> idx;
  std::vector<double> d2;
  tree.knn(Vec2(0, 0), 10, idx, d2);  // k larger than the tree
  CHECK(idx.size() == 4);

  KdTree2 empty;
  CHECK(empty.nearest(Vec2(0, 0)) == -1);
}
