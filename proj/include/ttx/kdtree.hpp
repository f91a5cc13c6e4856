#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "ttx/errors.hpp"

namespace ttx {

// Static 3D kd-tree over a copy of the input points. Median split, built
// once, nearest-neighbor queries with an optional distance cap. Behavior is
// deterministic for a fixed input ordering.
class KdTree3 {
 public:
  KdTree3() = default;

  explicit KdTree3(const std::vector<Eigen::Vector3d>& points) : pts_(points) {
    if (pts_.empty()) throw DegenerateGeometry("KdTree3: empty point set");
    order_.resize(pts_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    nodes_.reserve(2 * pts_.size());
    root_ = build(0, static_cast<int>(pts_.size()));
  }

  bool empty() const { return pts_.empty(); }
  std::size_t size() const { return pts_.size(); }

  struct Hit {
    int index = -1;           // index into the original point vector
    double sq_dist = std::numeric_limits<double>::infinity();
    bool found() const { return index >= 0; }
  };

  // Nearest neighbor of q. If max_dist is finite, only matches with
  // distance <= max_dist are reported (Hit.found() is false otherwise).
  Hit nearest(const Eigen::Vector3d& q,
              double max_dist = std::numeric_limits<double>::infinity()) const {
    Hit best;
    if (std::isfinite(max_dist)) best.sq_dist = max_dist * max_dist * (1.0 + 1e-15);
    search(root_, q, best);
    if (std::isfinite(max_dist) && best.index >= 0) {
      if (std::sqrt(best.sq_dist) > max_dist) best.index = -1;
    }
    return best;
  }

  const Eigen::Vector3d& point(int index) const { return pts_[static_cast<std::size_t>(index)]; }

 private:
  struct Node {
    int point = -1;   // index into pts_
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(int lo, int hi) {
    if (lo >= hi) return -1;
    // Split on the widest axis of this subset's bounding box.
    Eigen::Vector3d mn = pts_[static_cast<std::size_t>(order_[static_cast<std::size_t>(lo)])];
    Eigen::Vector3d mx = mn;
    for (int i = lo; i < hi; ++i) {
      const auto& p = pts_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
      mn = mn.cwiseMin(p);
      mx = mx.cwiseMax(p);
    }
    int axis = 0;
    (mx - mn).maxCoeff(&axis);

    const int mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](int a, int b) {
                       const double pa = pts_[static_cast<std::size_t>(a)][axis];
                       const double pb = pts_[static_cast<std::size_t>(b)][axis];
                       if (pa != pb) return pa < pb;
                       return a < b;  // total order keeps the tree deterministic
                     });

    Node node;
    node.point = order_[static_cast<std::size_t>(mid)];
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(lo, mid);
    const int right = build(mid + 1, hi);
    nodes_[static_cast<std::size_t>(self)].left = left;
    nodes_[static_cast<std::size_t>(self)].right = right;
    return self;
  }

  void search(int node_id, const Eigen::Vector3d& q, Hit& best) const {
    if (node_id < 0) return;
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    const Eigen::Vector3d& p = pts_[static_cast<std::size_t>(node.point)];
    const double d2 = (p - q).squaredNorm();
    if (d2 < best.sq_dist) {
      best.sq_dist = d2;
      best.index = node.point;
    }
    const double delta = q[node.axis] - p[node.axis];
    const int near = delta < 0 ? node.left : node.right;
    const int far = delta < 0 ? node.right : node.left;
    search(near, q, best);
    if (delta * delta < best.sq_dist) search(far, q, best);
  }

  std::vector<Eigen::Vector3d> pts_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Largest nearest-neighbor distance from any point of `from` to `to`
// (directed Hausdorff distance).
inline double directed_hausdorff(const std::vector<Eigen::Vector3d>& from, const KdTree3& to) {
  double worst = 0.0;
  for (const auto& p : from) {
    const auto hit = to.nearest(p);
    worst = std::max(worst, std::sqrt(hit.sq_dist));
  }
  return worst;
}

}  // namespace ttx
