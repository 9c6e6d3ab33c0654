#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "occface/config.hpp"
#include "occface/features.hpp"
#include "occface/occlusion.hpp"
#include "occface/recognition.hpp"
#include "occface/restoration.hpp"
#include "occface/synthetic.hpp"

namespace occface {

/// ICP onto `model`, then resampling of the aligned probe onto the grid and
/// weighted-median smoothing.
struct RegisteredScan {
  IcpResult icp;
  RangeImage image{1, 1};
  std::size_t dropped_points = 0;
};

RegisteredScan register_to_model(const PointCloudd& probe, const PointCloudd& model, int width, int height,
                                 const PipelineConfig& cfg);

/// Points of `probe` whose aligned position falls outside the occluded part
/// of `mask` (points off the grid are kept).
PointCloudd unoccluded_points(const PointCloudd& probe, const RigidTransformd& alignment, const OcclusionMask& mask,
                              double pixel_spacing);

/// Re-runs ICP from `previous` using only the unoccluded points, then
/// resamples the whole probe with the new transform.
RegisteredScan refine_registration(const PointCloudd& probe, const PointCloudd& model,
                                   const RigidTransformd& previous, const OcclusionMask& mask,
                                   const PipelineConfig& cfg);

struct Detection {
  DifferenceMap diff;
  OcclusionMask mask;
  EdgeResult edges;
};

Detection detect_occlusions(const RangeImage& candidate, const RangeImage& mean, const ThresholdConfig& cfg);

/// One input scan. Ground truth is optional (absent for real data).
struct ScanInput {
  ScanName name;
  std::string file;
  PointCloudd cloud;
  std::optional<RigidTransformd> truth_pose;
  std::optional<OcclusionMask> truth_mask;
  std::optional<RangeImage> truth_face;  ///< clean canonical face, when known
};

/// Reads the scans listed in a manifest (paths relative to `dataset_dir`).
std::vector<ScanInput> load_manifest_scans(const Manifest& manifest, const fs::path& dataset_dir);

struct ScanRecord {
  ScanName name;
  std::string file;
  IcpResult icp;
  std::optional<double> rotation_error_deg;
  std::optional<double> translation_error;
  std::optional<double> mask_iou;
  double occluded_fraction = 0.0;
  int boundary_components = 0;
  double restoration_error = 0.0;             ///< over observed pixels
  std::optional<double> restoration_full_error;  ///< over all pixels, against the clean face
  double registration_seconds = 0.0;
  Eigen::VectorXd normal_restored, normal_raw, pca_restored, pca_raw;
};

struct PipelineResult {
  PcaBasis basis;
  std::vector<ScanRecord> scans;
  /// Keys "normal" / "pca", each with "with_restoration" / "without_restoration".
  std::map<std::string, std::map<std::string, EvaluationReport>> evaluations;
  std::map<std::string, std::map<std::string, std::vector<LabeledFeature>>> features;
  nlohmann::json report;   ///< deterministic for fixed inputs, config and seed
  nlohmann::json timings;  ///< wall-clock figures, kept apart from `report`
};

/// Full chain over a scan set: neutral scans build the PCA basis (its mean is
/// the registration and detection reference); every scan is registered,
/// smoothed, checked for occlusions, restored and turned into features; then
/// the split is evaluated with and without restoration for normal and PCA
/// features. Image artifacts go to `artifact_dir` when given.
PipelineResult run_pipeline(const std::vector<ScanInput>& scans, int width, int height, const PipelineConfig& cfg,
                            std::uint64_t seed, const std::optional<fs::path>& artifact_dir = std::nullopt);

/// Plain-text table of rank-1 / rank-2 rates (features x restoration).
std::string comparison_table(const PipelineResult& result);

}  // namespace occface
