#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "occface/dataset_io.hpp"
#include "occface/occlusion.hpp"
#include "occface/preprocess.hpp"
#include "occface/recognition.hpp"
#include "occface/registration.hpp"

namespace occface {

inline constexpr int kConfigVersion = 1;

/// Every tunable of the processing chain. Serialized as a versioned JSON
/// document; missing keys take the defaults below.
struct PipelineConfig {
  double pixel_spacing = 1.0;
  MedianFilterConfig median = MedianFilterConfig::Uniform(1);
  /// Occluders need a larger rejected share than the ICP default.
  IcpConfig icp = {.rejection_fraction = 0.3, .initial_transform = std::nullopt};
  /// The mean face is resampled this many times finer before it serves as the
  /// ICP model, so a probe sampled on the same lattice is not trapped one
  /// pixel off.
  int model_upsampling = 3;
  /// Extra ICP rounds that fit only the points outside the detected mask.
  int refine_passes = 1;
  double refine_rejection_fraction = 0.1;
  ThresholdConfig threshold;
  int pca_components = 0;    ///< 0 selects the count from pca_energy
  double pca_energy = 0.95;
  int downsample_factor = 4;
  double test_fraction = 1.0 / 3.0;
  TrainConfig classifier;
  std::vector<int> ranks = {1, 2};
  unsigned workers = 0;      ///< 0 = hardware concurrency

  void validate() const;
};

nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const fs::path& path);

ThresholdMode parse_threshold_mode(const std::string& name);
std::string to_string(ThresholdMode mode);
ClassifierKind parse_classifier_kind(const std::string& name);
std::string to_string(ClassifierKind kind);

}  // namespace occface
