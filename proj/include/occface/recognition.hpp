#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace occface {

enum class OcclusionKind { kEye, kMouth, kGlasses, kHair, kNone };

inline constexpr OcclusionKind kAllOcclusionKinds[] = {OcclusionKind::kEye, OcclusionKind::kMouth,
                                                       OcclusionKind::kGlasses, OcclusionKind::kHair,
                                                       OcclusionKind::kNone};

std::string to_string(OcclusionKind kind);
/// Accepts the lower-case names produced by to_string.
OcclusionKind parse_occlusion_kind(const std::string& name);

struct LabeledFeature {
  int subject_id = 0;
  OcclusionKind kind = OcclusionKind::kNone;
  Eigen::VectorXd vector;
  std::string source;  ///< originating scan, informational only
};

struct DatasetSplit {
  std::vector<LabeledFeature> train;
  std::vector<LabeledFeature> test;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;
  /// Subjects with a single sample; they stay in train.
  std::vector<int> unsplittable_subjects;
};

/// Per subject, round(n * test_fraction) samples (at most n - 1) go to test,
/// so every subject stays in the gallery. Test picks rotate through the
/// occlusion kinds across subjects to balance kinds. Deterministic in `seed`.
DatasetSplit split_dataset(const std::vector<LabeledFeature>& items, double test_fraction, std::uint64_t seed);

enum class ClassifierKind { kNearestNeighbor, kMlp };

struct TrainConfig {
  ClassifierKind kind = ClassifierKind::kNearestNeighbor;
  int hidden_units = 32;
  int epochs = 500;
  double learning_rate = 0.1;
  std::uint64_t seed = 1;
};

struct NearestNeighborModel {
  Eigen::MatrixXd gallery;  ///< one sample per row
  std::vector<int> labels;
};

/// One tanh hidden layer followed by a softmax output; outputs are indexed by
/// position in `classes`.
struct MlpModel {
  std::vector<int> classes;
  Eigen::MatrixXd w1;  ///< hidden x input
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  ///< classes x hidden
  Eigen::VectorXd b2;
  std::uint64_t seed = 0;
  int epochs_trained = 0;
  double learning_rate = 0.0;
  std::vector<double> loss_history;  ///< loss before each update
  double final_loss = 0.0;

  Eigen::Index input_size() const { return w1.cols(); }
};

struct ClassifierModel {
  std::variant<NearestNeighborModel, MlpModel> model;

  ClassifierKind kind() const {
    return std::holds_alternative<NearestNeighborModel>(model) ? ClassifierKind::kNearestNeighbor
                                                               : ClassifierKind::kMlp;
  }
  Eigen::Index input_size() const;
};

ClassifierModel train(const std::vector<LabeledFeature>& train_set, const TrainConfig& config);

/// Random initial network (Xavier-uniform weights, zero biases).
MlpModel init_mlp(Eigen::Index inputs, int hidden, std::vector<int> classes, std::uint64_t seed);

struct MlpGradient {
  double loss = 0.0;  ///< mean cross-entropy
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

/// Loss and analytic gradient; `inputs` holds one sample per row and
/// `targets` the output index of each sample.
MlpGradient mlp_loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs,
                                  const std::vector<int>& targets);

struct RankedLabel {
  int label = 0;
  double score = 0.0;
};

/// Every known label exactly once, best first; equal scores rank the lower
/// label first. Nearest neighbor scores are negative distances to the closest
/// gallery sample of each label; MLP scores are log-probabilities.
std::vector<RankedLabel> classify(const ClassifierModel& model, const Eigen::VectorXd& vector);

struct ConfusionEntry {
  int truth = 0;
  int predicted = 0;
  int count = 0;
};

struct EvaluationReport {
  std::vector<int> ks;
  std::map<int, double> rank_rates;  ///< k -> fraction with truth in the top k
  double rank_1 = 0.0;
  double rank_2 = 0.0;
  std::map<OcclusionKind, std::map<int, double>> per_occlusion;
  std::map<OcclusionKind, int> per_occlusion_count;
  std::vector<ConfusionEntry> confusion;  ///< top-1 outcomes, sorted by (truth, predicted)
  int test_count = 0;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;
};

EvaluationReport evaluate(const ClassifierModel& model, const std::vector<LabeledFeature>& test_set,
                          std::vector<int> ks = {1, 2});

}  // namespace occface
