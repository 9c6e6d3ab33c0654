#include "occface/registration.hpp"

#include <algorithm>
#include <cmath>

#include "occface/nearest_neighbor.hpp"

namespace occface {

namespace {

std::vector<Correspondence> match(const Eigen::Matrix3Xd& probe, const KdTree3& tree) {
  std::vector<Correspondence> out(static_cast<std::size_t>(probe.cols()));
  for (Eigen::Index i = 0; i < probe.cols(); ++i) {
    const auto hit = tree.nearest(probe.col(i));
    out[static_cast<std::size_t>(i)] = {i, hit.index, std::sqrt(hit.squared_distance)};
  }
  return out;
}

/// Keeps the best (1 - fraction) of the pairs, never fewer than 3.
std::vector<Correspondence> reject_worst(std::vector<Correspondence> pairs, double fraction) {
  const auto n = pairs.size();
  const auto drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  const auto keep = std::min(n, std::max<std::size_t>(3, n - drop));
  if (keep == n) return pairs;
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Correspondence& a, const Correspondence& b) { return a.distance < b.distance; });
  pairs.resize(keep);
  return pairs;
}

double rms_distance(const std::vector<Correspondence>& pairs) {
  if (pairs.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& p : pairs) acc += p.distance * p.distance;
  return std::sqrt(acc / static_cast<double>(pairs.size()));
}

bool collinear(const Eigen::Matrix3Xd& centered) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(centered * centered.transpose());
  const auto& sv = svd.singularValues();
  return !(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0);
}

}  // namespace

std::vector<Correspondence> nearest_correspondences(const PointCloudd& probe, const PointCloudd& model) {
  if (probe.empty() || model.empty()) throw EmptyInputError("nearest_correspondences: empty point cloud");
  return match(probe.points(), KdTree3(model.points()));
}

RigidTransformd best_rigid_transform(const Eigen::Matrix3Xd& source, const Eigen::Matrix3Xd& target) {
  if (source.cols() != target.cols()) throw ValidationError("best_rigid_transform: pair count mismatch");
  if (source.cols() < 3) throw DegenerateGeometryError("best_rigid_transform: fewer than 3 point pairs");
  if (!source.allFinite() || !target.allFinite()) throw ValidationError("best_rigid_transform: non-finite point");

  const Eigen::Vector3d src_mean = source.rowwise().mean();
  const Eigen::Vector3d tgt_mean = target.rowwise().mean();
  const Eigen::Matrix3Xd src = source.colwise() - src_mean;
  const Eigen::Matrix3Xd tgt = target.colwise() - tgt_mean;
  if (collinear(src) || collinear(tgt)) {
    throw DegenerateGeometryError("best_rigid_transform: collinear point configuration");
  }

  const Eigen::Matrix3d cross = src * tgt.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d correction = Eigen::Matrix3d::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) correction(2, 2) = -1.0;
  Eigen::Matrix3d rot = svd.matrixV() * correction * svd.matrixU().transpose();

  // Re-orthonormalize to absorb SVD round-off before the strict check.
  Eigen::JacobiSVD<Eigen::Matrix3d> polish(rot, Eigen::ComputeFullU | Eigen::ComputeFullV);
  rot = polish.matrixU() * polish.matrixV().transpose();
  return RigidTransformd(rot, tgt_mean - rot * src_mean);
}

double rmse(const PointCloudd& v, const PointCloudd& w) {
  if (v.size() != w.size()) throw ValidationError("rmse: clouds differ in size");
  if (v.empty()) throw EmptyInputError("rmse: empty point clouds");
  require_finite(v, "rmse first cloud");
  require_finite(w, "rmse second cloud");
  return std::sqrt((v.points() - w.points()).colwise().squaredNorm().mean());
}

void IcpConfig::validate() const {
  if (max_iterations < 1) throw ValidationError("icp: max_iterations must be >= 1");
  if (!(convergence_epsilon > 0.0)) throw ValidationError("icp: convergence_epsilon must be > 0");
  if (!(rejection_fraction >= 0.0 && rejection_fraction < 1.0)) {
    throw ValidationError("icp: rejection_fraction must lie in [0, 1)");
  }
}

IcpResult icp(const PointCloudd& probe, const PointCloudd& model, const IcpConfig& cfg) {
  cfg.validate();
  if (probe.empty() || model.empty()) throw EmptyInputError("icp: empty point cloud");
  require_finite(probe, "icp probe");
  require_finite(model, "icp model");

  const KdTree3 tree(model.points());
  const Eigen::Matrix3Xd& raw = probe.points();
  const Eigen::Matrix3Xd& target = model.points();

  RigidTransformd current = cfg.initial_transform.value_or(
      RigidTransformd::Translation(model.centroid() - probe.centroid()));

  auto transformed = [&](const RigidTransformd& t) -> Eigen::Matrix3Xd {
    Eigen::Matrix3Xd out = t.rotation() * raw;
    out.colwise() += t.translation();
    return out;
  };

  IcpResult result;
  std::vector<Correspondence> all = match(transformed(current), tree);
  std::vector<Correspondence> kept = reject_worst(all, cfg.rejection_fraction);
  result.initial_rmse = rms_distance(kept);

  RigidTransformd best = current;
  double best_rmse = result.initial_rmse;
  std::vector<Correspondence> best_all = all;
  double previous = result.initial_rmse;

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const auto n = static_cast<Eigen::Index>(kept.size());
    Eigen::Matrix3Xd src(3, n), dst(3, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      src.col(k) = raw.col(kept[static_cast<std::size_t>(k)].probe_index);
      dst.col(k) = target.col(kept[static_cast<std::size_t>(k)].model_index);
    }
    current = best_rigid_transform(src, dst);

    all = match(transformed(current), tree);
    kept = reject_worst(all, cfg.rejection_fraction);
    const double now = rms_distance(kept);
    result.rmse_history.push_back(now);
    result.iterations_run = it;
    if (now < best_rmse) {
      best = current;
      best_rmse = now;
      best_all = all;
    }
    if (previous - now < cfg.convergence_epsilon) {
      result.converged = true;
      break;
    }
    previous = now;
  }

  result.transform = best;
  result.final_rmse = best_rmse;
  result.final_rmse_all = rms_distance(best_all);
  return result;
}

}  // namespace occface
