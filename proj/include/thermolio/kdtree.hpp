#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace thermolio {

// Exact k-nearest-neighbour tree over a fixed point set. Build once, query
// from any number of threads.
template <int Dim>
class KdTree {
 public:
  using Point = Eigen::Matrix<double, Dim, 1>;

  KdTree() = default;

  explicit KdTree(std::vector<Point> points) : points_(std::move(points)) {
    nodes_.reserve(points_.size());
    std::vector<int> idx(points_.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (!idx.empty()) root_ = build(idx.data(), static_cast<int>(idx.size()));
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Point>& points() const { return points_; }

  // k nearest neighbours, ascending by distance. Returns fewer than k when
  // the tree is smaller than k.
  void knn(const Point& query, int k, std::vector<int>& out_idx,
           std::vector<double>& out_sqdist) const {
    out_idx.clear();
    out_sqdist.clear();
    if (root_ < 0 || k <= 0) return;
    Heap heap(k);
    search(root_, query, heap);
    heap.sorted(out_idx, out_sqdist);
  }

  int nearest(const Point& query) const {
    std::vector<int> idx;
    std::vector<double> d2;
    knn(query, 1, idx, d2);
    return idx.empty() ? -1 : idx[0];
  }

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  // Fixed-capacity max-heap of the best candidates seen so far.
  struct Heap {
    explicit Heap(int k) : cap(k) { entries.reserve(k); }
    int cap;
    std::vector<std::pair<double, int>> entries;  // (sqdist, index)

    double worst() const {
      return static_cast<int>(entries.size()) < cap
                 ? std::numeric_limits<double>::infinity()
                 : entries.front().first;
    }
    void push(double d2, int i) {
      if (static_cast<int>(entries.size()) < cap) {
        entries.emplace_back(d2, i);
        std::push_heap(entries.begin(), entries.end());
      } else if (d2 < entries.front().first) {
        std::pop_heap(entries.begin(), entries.end());
        entries.back() = {d2, i};
        std::push_heap(entries.begin(), entries.end());
      }
    }
    void sorted(std::vector<int>& idx, std::vector<double>& d2) {
      std::sort_heap(entries.begin(), entries.end());
      for (const auto& [d, i] : entries) {
        idx.push_back(i);
        d2.push_back(d);
      }
    }
  };

  int build(int* idx, int count) {
    if (count <= 0) return -1;
    // Split on the widest dimension at the median.
    Point lo = points_[idx[0]], hi = points_[idx[0]];
    for (int i = 1; i < count; ++i) {
      lo = lo.cwiseMin(points_[idx[i]]);
      hi = hi.cwiseMax(points_[idx[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    int mid = count / 2;
    std::nth_element(idx, idx + mid, idx + count, [&](int a, int b) {
      return points_[a][axis] < points_[b][axis];
    });
    Node node;
    node.point = idx[mid];
    node.axis = axis;
    int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    int left = build(idx, mid);
    int right = build(idx + mid + 1, count - mid - 1);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search(int node_id, const Point& query, Heap& heap) const {
    const Node& node = nodes_[node_id];
    const Point& p = points_[node.point];
    heap.push((p - query).squaredNorm(), node.point);
    const double delta = query[node.axis] - p[node.axis];
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    if (near >= 0) search(near, query, heap);
    if (far >= 0 && delta * delta < heap.worst()) search(far, query, heap);
  }

  std::vector<Point> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

using KdTree2 = KdTree<2>;
using KdTree3 = KdTree<3>;

}  // namespace thermolio
