#include "occface/config.hpp"

namespace occface {

using nlohmann::json;

ThresholdMode parse_threshold_mode(const std::string& name) {
  if (name == "per_column") return ThresholdMode::kPerColumn;
  if (name == "global_quantile") return ThresholdMode::kGlobalQuantile;
  throw ValidationError("unknown threshold mode '" + name + "'");
}

std::string to_string(ThresholdMode mode) {
  return mode == ThresholdMode::kPerColumn ? "per_column" : "global_quantile";
}

ClassifierKind parse_classifier_kind(const std::string& name) {
  if (name == "nearest_neighbor") return ClassifierKind::kNearestNeighbor;
  if (name == "mlp") return ClassifierKind::kMlp;
  throw ValidationError("unknown classifier '" + name + "'");
}

std::string to_string(ClassifierKind kind) {
  return kind == ClassifierKind::kNearestNeighbor ? "nearest_neighbor" : "mlp";
}

void PipelineConfig::validate() const {
  if (!(pixel_spacing > 0.0)) throw ValidationError("config: pixel_spacing must be > 0");
  median.validate();
  icp.validate();
  threshold.validate();
  if (model_upsampling < 1) throw ValidationError("config: registration.model_upsampling must be >= 1");
  if (refine_passes < 0) throw ValidationError("config: registration.refine_passes must be >= 0");
  if (!(refine_rejection_fraction >= 0.0 && refine_rejection_fraction < 1.0)) {
    throw ValidationError("config: registration.refine_rejection_fraction must lie in [0, 1)");
  }
  if (pca_components < 0) throw ValidationError("config: pca.components must be >= 0");
  if (!(pca_energy > 0.0 && pca_energy <= 1.0)) throw ValidationError("config: pca.energy must lie in (0, 1]");
  if (downsample_factor < 1) throw ValidationError("config: features.downsample_factor must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("config: test_fraction must lie in (0, 1)");
  if (ranks.empty()) throw ValidationError("config: ranks must not be empty");
  for (int k : ranks) {
    if (k < 1) throw ValidationError("config: ranks must be >= 1");
  }
}

json config_to_json(const PipelineConfig& c) {
  json weights = c.median.weights.empty() ? json(nullptr) : json(c.median.weights);
  return json{
      {"version", kConfigVersion},
      {"pixel_spacing", c.pixel_spacing},
      {"median_filter", {{"radius", c.median.window_radius}, {"weights", weights}}},
      {"icp",
       {{"max_iterations", c.icp.max_iterations},
        {"convergence_epsilon", c.icp.convergence_epsilon},
        {"rejection_fraction", c.icp.rejection_fraction}}},
      {"registration",
       {{"model_upsampling", c.model_upsampling},
        {"refine_passes", c.refine_passes},
        {"refine_rejection_fraction", c.refine_rejection_fraction}}},
      {"occlusion",
       {{"mode", to_string(c.threshold.mode)},
        {"tolerance_fraction", c.threshold.tolerance_fraction},
        {"column_floor_fraction", c.threshold.column_floor_fraction},
        {"quantile", c.threshold.quantile}}},
      {"pca", {{"components", c.pca_components}, {"energy", c.pca_energy}}},
      {"features", {{"downsample_factor", c.downsample_factor}}},
      {"recognition",
       {{"test_fraction", c.test_fraction},
        {"classifier", to_string(c.classifier.kind)},
        {"hidden_units", c.classifier.hidden_units},
        {"epochs", c.classifier.epochs},
        {"learning_rate", c.classifier.learning_rate},
        {"seed", c.classifier.seed},
        {"ranks", c.ranks}}},
      {"workers", c.workers},
  };
}

PipelineConfig config_from_json(const json& j) {
  if (j.value("version", kConfigVersion) != kConfigVersion) throw ValidationError("unsupported config version");
  PipelineConfig c;
  try {
    c.pixel_spacing = j.value("pixel_spacing", c.pixel_spacing);
    if (j.contains("median_filter")) {
      const auto& m = j.at("median_filter");
      c.median.window_radius = m.value("radius", c.median.window_radius);
      if (m.contains("weights") && !m.at("weights").is_null()) {
        c.median.weights = m.at("weights").get<std::vector<int>>();
      } else {
        c.median = MedianFilterConfig::Uniform(c.median.window_radius);
      }
    }
    if (j.contains("icp")) {
      const auto& i = j.at("icp");
      c.icp.max_iterations = i.value("max_iterations", c.icp.max_iterations);
      c.icp.convergence_epsilon = i.value("convergence_epsilon", c.icp.convergence_epsilon);
      c.icp.rejection_fraction = i.value("rejection_fraction", c.icp.rejection_fraction);
    }
    if (j.contains("registration")) {
      const auto& r = j.at("registration");
      c.model_upsampling = r.value("model_upsampling", c.model_upsampling);
      c.refine_passes = r.value("refine_passes", c.refine_passes);
      c.refine_rejection_fraction = r.value("refine_rejection_fraction", c.refine_rejection_fraction);
    }
    if (j.contains("occlusion")) {
      const auto& o = j.at("occlusion");
      c.threshold.mode = parse_threshold_mode(o.value("mode", to_string(c.threshold.mode)));
      c.threshold.tolerance_fraction = o.value("tolerance_fraction", c.threshold.tolerance_fraction);
      c.threshold.quantile = o.value("quantile", c.threshold.quantile);
      c.threshold.column_floor_fraction = o.value("column_floor_fraction", c.threshold.column_floor_fraction);
    }
    if (j.contains("pca")) {
      c.pca_components = j.at("pca").value("components", c.pca_components);
      c.pca_energy = j.at("pca").value("energy", c.pca_energy);
    }
    if (j.contains("features")) c.downsample_factor = j.at("features").value("downsample_factor", c.downsample_factor);
    if (j.contains("recognition")) {
      const auto& r = j.at("recognition");
      c.test_fraction = r.value("test_fraction", c.test_fraction);
      c.classifier.kind = parse_classifier_kind(r.value("classifier", to_string(c.classifier.kind)));
      c.classifier.hidden_units = r.value("hidden_units", c.classifier.hidden_units);
      c.classifier.epochs = r.value("epochs", c.classifier.epochs);
      c.classifier.learning_rate = r.value("learning_rate", c.classifier.learning_rate);
      c.classifier.seed = r.value("seed", c.classifier.seed);
      c.ranks = r.value("ranks", c.ranks);
    }
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
  }
  return config_from_json(j);
}

}  // namespace occface
