#pragma once

#include <Eigen/Dense>

#include <vector>

namespace occface {

/// Exact 3D nearest-neighbor index (k-d tree). Queries return the same
/// answer as a linear scan: minimum squared distance, ties resolved toward
/// the lowest point index.
class KdTree3 {
 public:
  struct Hit {
    Eigen::Index index = -1;
    double squared_distance = 0.0;
  };

  explicit KdTree3(const Eigen::Matrix3Xd& points, int leaf_size = 16);

  Hit nearest(const Eigen::Vector3d& query) const;
  Eigen::Index size() const { return points_.cols(); }

 private:
  struct Node {
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
  };

  int build(int begin, int end);

  Eigen::Matrix3Xd points_;
  Eigen::Matrix3Xd sorted_;  // points_ in tree order, so leaves are contiguous
  std::vector<Eigen::Index> order_;
  std::vector<Node> nodes_;
  int leaf_size_;
};

/// Reference linear scan with the same tie rule as KdTree3.
KdTree3::Hit brute_force_nearest(const Eigen::Matrix3Xd& points, const Eigen::Vector3d& query);

}  // namespace occface
