#include "occface/nearest_neighbor.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "occface/error.hpp"

namespace occface {

namespace {

inline bool better(double d2, Eigen::Index idx, const KdTree3::Hit& best) {
  return best.index < 0 || d2 < best.squared_distance || (d2 == best.squared_distance && idx < best.index);
}

}  // namespace

KdTree3::KdTree3(const Eigen::Matrix3Xd& points, int leaf_size) : points_(points), leaf_size_(std::max(1, leaf_size)) {
  if (points_.cols() == 0) throw EmptyInputError("KdTree3: no points");
  order_.resize(static_cast<std::size_t>(points_.cols()));
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  nodes_.reserve(2 * order_.size() / static_cast<std::size_t>(leaf_size_) + 2);
  build(0, static_cast<int>(order_.size()));
  sorted_.resize(3, points_.cols());
  for (std::size_t i = 0; i < order_.size(); ++i) sorted_.col(static_cast<Eigen::Index>(i)) = points_.col(order_[i]);
}

int KdTree3::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, -1, -1, begin, end});
  if (end - begin <= leaf_size_) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_.col(order_[static_cast<std::size_t>(i)]));
    hi = hi.cwiseMax(points_.col(order_[static_cast<std::size_t>(i)]));
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi(axis) - lo(axis) <= 0.0) return id;  // all points coincide

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](Eigen::Index a, Eigen::Index b) { return points_(axis, a) < points_(axis, b); });
  const double split = points_(axis, order_[static_cast<std::size_t>(mid)]);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

KdTree3::Hit KdTree3::nearest(const Eigen::Vector3d& query) const {
  Hit best;
  // Left subtree holds coordinates <= split, right subtree >= split.
  // `bound` is the squared distance from the query to the node's cell,
  // accumulated from the per-axis offsets of the splits crossed so far.
  struct Pending {
    int node;
    double bound;
    Eigen::Vector3d offset;
  };
  // Median splits keep the depth below 64, and each level adds at most one
  // pending entry.
  std::array<Pending, 128> stack;
  int top = 0;
  stack[top++] = {0, 0.0, Eigen::Vector3d::Zero()};
  while (top > 0) {
    const Pending p = stack[--top];
    // The slack keeps rounding in the bound from pruning an exact tie.
    if (best.index >= 0 && p.bound * (1.0 - 1e-12) > best.squared_distance) continue;
    const Node& node = nodes_[static_cast<std::size_t>(p.node)];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const double d2 = (sorted_.col(i) - query).squaredNorm();
        const Eigen::Index idx = order_[static_cast<std::size_t>(i)];
        if (better(d2, idx, best)) best = {idx, d2};
      }
      continue;
    }
    const double diff = query(node.axis) - node.split;
    const int near = diff <= 0.0 ? node.left : node.right;
    const int far = diff <= 0.0 ? node.right : node.left;
    Eigen::Vector3d far_offset = p.offset;
    far_offset(node.axis) = diff;
    stack[top++] = {far, far_offset.squaredNorm(), far_offset};
    stack[top++] = {near, p.bound, p.offset};
  }
  return best;
}

KdTree3::Hit brute_force_nearest(const Eigen::Matrix3Xd& points, const Eigen::Vector3d& query) {
  if (points.cols() == 0) throw EmptyInputError("brute_force_nearest: no points");
  KdTree3::Hit best;
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const double d2 = (points.col(i) - query).squaredNorm();
    if (better(d2, i, best)) best = {i, d2};
  }
  return best;
}

}  // namespace occface
