#pragma once

#include <optional>
#include <vector>

#include "occface/core.hpp"

namespace occface {

struct Correspondence {
  Eigen::Index probe_index = 0;
  Eigen::Index model_index = 0;
  double distance = 0.0;
};

/// For every probe point, the closest model point (exact search; ties go to
/// the lowest model index). Output is ordered by probe index.
std::vector<Correspondence> nearest_correspondences(const PointCloudd& probe, const PointCloudd& model);

/// Least-squares rigid transform T minimizing sum ||T(source_i) - target_i||^2
/// (orthogonal Procrustes with reflection correction, so det R = +1).
/// Throws DegenerateGeometryError for fewer than 3 pairs or collinear input.
RigidTransformd best_rigid_transform(const Eigen::Matrix3Xd& source, const Eigen::Matrix3Xd& target);

/// Root mean squared point distance between index-corresponded clouds.
double rmse(const PointCloudd& v, const PointCloudd& w);

struct IcpConfig {
  int max_iterations = 100;
  /// Stop once the RMSE improves by less than this between iterations.
  double convergence_epsilon = 1e-10;
  /// Fraction of worst-distance correspondences dropped every iteration.
  double rejection_fraction = 0.1;
  /// Starting transform; when absent the probe centroid is moved onto the
  /// model centroid.
  std::optional<RigidTransformd> initial_transform;

  void validate() const;
};

struct IcpResult {
  /// Maps probe coordinates onto the model. If the RMSE rose on the last
  /// step this is the best transform seen, not the last one.
  RigidTransformd transform;
  double initial_rmse = 0.0;  ///< inlier RMSE under the initial transform
  std::vector<double> rmse_history;  ///< inlier RMSE after each iteration
  int iterations_run = 0;
  bool converged = false;
  /// Inlier RMSE at `transform` (the lowest value seen).
  double final_rmse = 0.0;
  /// RMSE over all nearest correspondences (no rejection) at `transform`.
  double final_rmse_all = 0.0;
};

/// Point-to-point ICP with worst-fraction correspondence rejection.
IcpResult icp(const PointCloudd& probe, const PointCloudd& model, const IcpConfig& cfg = {});

}  // namespace occface
