#include "occface/recognition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "occface/error.hpp"

namespace occface {

std::string to_string(OcclusionKind kind) {
  switch (kind) {
    case OcclusionKind::kEye: return "eye";
    case OcclusionKind::kMouth: return "mouth";
    case OcclusionKind::kGlasses: return "glasses";
    case OcclusionKind::kHair: return "hair";
    case OcclusionKind::kNone: return "none";
  }
  return "none";
}

OcclusionKind parse_occlusion_kind(const std::string& name) {
  for (auto kind : kAllOcclusionKinds) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("unknown occlusion kind '" + name + "'");
}

DatasetSplit split_dataset(const std::vector<LabeledFeature>& items, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("test_fraction must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < items.size(); ++i) by_subject[items[i].subject_id].push_back(i);

  constexpr int kKinds = static_cast<int>(std::size(kAllOcclusionKinds));
  std::mt19937_64 rng(seed);
  const int base = static_cast<int>(rng() % kKinds);

  DatasetSplit split;
  split.test_fraction = test_fraction;
  split.seed = seed;
  std::vector<bool> is_test(items.size(), false);
  int ordinal = 0;
  for (auto& [subject, idx] : by_subject) {
    const int offset = (base + ordinal++) % kKinds;
    if (idx.size() < 2) {
      split.unsplittable_subjects.push_back(subject);
      continue;
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      auto key = [&](std::size_t i) { return (static_cast<int>(items[i].kind) - offset + kKinds) % kKinds; };
      return key(a) < key(b);
    });
    const auto n = idx.size();
    const auto wanted = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
    const auto n_test = std::min(wanted, n - 1);
    for (std::size_t k = 0; k < n_test; ++k) is_test[idx[k]] = true;
  }
  for (std::size_t i = 0; i < items.size(); ++i) (is_test[i] ? split.test : split.train).push_back(items[i]);
  return split;
}

Eigen::Index ClassifierModel::input_size() const {
  if (const auto* nn = std::get_if<NearestNeighborModel>(&model)) return nn->gallery.cols();
  return std::get<MlpModel>(model).input_size();
}

namespace {

Eigen::MatrixXd stack_rows(const std::vector<LabeledFeature>& items) {
  const Eigen::Index d = items.front().vector.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(items.size()), d);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].vector.size() != d) throw ValidationError("feature vectors differ in length");
    if (!items[i].vector.allFinite()) throw ValidationError("feature vector has non-finite entries");
    out.row(static_cast<Eigen::Index>(i)) = items[i].vector.transpose();
  }
  return out;
}

/// Row-wise softmax of logits (samples x classes).
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

}  // namespace

MlpModel init_mlp(Eigen::Index inputs, int hidden, std::vector<int> classes, std::uint64_t seed) {
  if (inputs < 1 || hidden < 1 || classes.size() < 2) throw ValidationError("init_mlp: bad layer sizes");
  MlpModel m;
  m.classes = std::move(classes);
  m.seed = seed;
  const auto c = static_cast<Eigen::Index>(m.classes.size());
  std::mt19937_64 rng(seed);
  auto fill = [&](Eigen::MatrixXd& w, Eigen::Index rows, Eigen::Index cols) {
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-a, a);
    w.resize(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = dist(rng);
  };
  fill(m.w1, hidden, inputs);
  fill(m.w2, c, hidden);
  m.b1 = Eigen::VectorXd::Zero(hidden);
  m.b2 = Eigen::VectorXd::Zero(c);
  return m;
}

MlpGradient mlp_loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs,
                                  const std::vector<int>& targets) {
  const Eigen::Index n = inputs.rows();
  if (n == 0 || static_cast<std::size_t>(n) != targets.size()) throw ValidationError("mlp: sample/target mismatch");
  if (inputs.cols() != model.input_size()) throw ValidationError("mlp: input length mismatch");

  const Eigen::MatrixXd pre = (inputs * model.w1.transpose()).rowwise() + model.b1.transpose();
  const Eigen::MatrixXd hidden = pre.array().tanh();
  const Eigen::MatrixXd logits = (hidden * model.w2.transpose()).rowwise() + model.b2.transpose();
  Eigen::MatrixXd delta = softmax_rows(logits);

  MlpGradient g;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    g.loss -= log_softmax(logits.row(i).transpose())(t);
    delta(i, t) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  g.loss *= inv_n;
  delta *= inv_n;

  g.w2 = delta.transpose() * hidden;
  g.b2 = delta.colwise().sum().transpose();
  const Eigen::MatrixXd back = (delta * model.w2).array() * (1.0 - hidden.array().square());
  g.w1 = back.transpose() * inputs;
  g.b1 = back.colwise().sum().transpose();
  return g;
}

ClassifierModel train(const std::vector<LabeledFeature>& train_set, const TrainConfig& config) {
  if (train_set.empty()) throw EmptyInputError("train: empty training set");
  const Eigen::MatrixXd x = stack_rows(train_set);
  std::vector<int> labels;
  labels.reserve(train_set.size());
  for (const auto& f : train_set) labels.push_back(f.subject_id);
  const std::set<int> classes(labels.begin(), labels.end());
  if (classes.size() < 2) throw ValidationError("train: need at least 2 classes");

  if (config.kind == ClassifierKind::kNearestNeighbor) {
    return {NearestNeighborModel{x, std::move(labels)}};
  }

  if (config.epochs < 0 || !(config.learning_rate > 0.0)) throw ValidationError("train: bad mlp schedule");
  MlpModel m = init_mlp(x.cols(), config.hidden_units, std::vector<int>(classes.begin(), classes.end()), config.seed);
  m.learning_rate = config.learning_rate;
  std::vector<int> targets;
  targets.reserve(labels.size());
  for (int l : labels) {
    targets.push_back(static_cast<int>(std::lower_bound(m.classes.begin(), m.classes.end(), l) - m.classes.begin()));
  }
  for (int e = 0; e < config.epochs; ++e) {
    const MlpGradient g = mlp_loss_and_gradient(m, x, targets);
    m.loss_history.push_back(g.loss);
    m.w1 -= config.learning_rate * g.w1;
    m.b1 -= config.learning_rate * g.b1;
    m.w2 -= config.learning_rate * g.w2;
    m.b2 -= config.learning_rate * g.b2;
    ++m.epochs_trained;
  }
  m.final_loss = mlp_loss_and_gradient(m, x, targets).loss;
  if (!m.w1.allFinite() || !m.w2.allFinite()) {
    throw Error(ErrorCategory::kNumerical, "diverged", "train: mlp weights diverged");
  }
  return {std::move(m)};
}

std::vector<RankedLabel> classify(const ClassifierModel& model, const Eigen::VectorXd& vector) {
  if (vector.size() != model.input_size()) throw ValidationError("classify: feature length mismatch");
  std::vector<RankedLabel> ranked;
  if (const auto* nn = std::get_if<NearestNeighborModel>(&model.model)) {
    std::map<int, double> best;
    for (Eigen::Index i = 0; i < nn->gallery.rows(); ++i) {
      const double d = (nn->gallery.row(i).transpose() - vector).norm();
      const int label = nn->labels[static_cast<std::size_t>(i)];
      auto [it, inserted] = best.emplace(label, d);
      if (!inserted) it->second = std::min(it->second, d);
    }
    for (const auto& [label, d] : best) ranked.push_back({label, -d});
  } else {
    const auto& m = std::get<MlpModel>(model.model);
    const Eigen::VectorXd hidden = (m.w1 * vector + m.b1).array().tanh();
    const Eigen::VectorXd logp = log_softmax(m.w2 * hidden + m.b2);
    for (std::size_t k = 0; k < m.classes.size(); ++k) {
      ranked.push_back({m.classes[k], logp(static_cast<Eigen::Index>(k))});
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedLabel& a, const RankedLabel& b) {
    return a.score > b.score || (a.score == b.score && a.label < b.label);
  });
  return ranked;
}

EvaluationReport evaluate(const ClassifierModel& model, const std::vector<LabeledFeature>& test_set,
                          std::vector<int> ks) {
  if (test_set.empty()) throw EmptyInputError("evaluate: empty test set");
  for (int k : {1, 2}) {
    if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.front() < 1) throw ValidationError("evaluate: ranks must be >= 1");

  EvaluationReport report;
  report.ks = ks;
  std::map<int, int> hits;
  std::map<OcclusionKind, std::map<int, int>> kind_hits;
  std::map<std::pair<int, int>, int> confusion;
  for (const auto& item : test_set) {
    const auto ranked = classify(model, item.vector);
    std::size_t pos = ranked.size();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (ranked[i].label == item.subject_id) {
        pos = i;
        break;
      }
    }
    ++report.per_occlusion_count[item.kind];
    for (int k : ks) {
      const int hit = pos < static_cast<std::size_t>(k) ? 1 : 0;
      hits[k] += hit;
      kind_hits[item.kind][k] += hit;
    }
    ++confusion[{item.subject_id, ranked.front().label}];
  }
  const auto n = static_cast<double>(test_set.size());
  for (int k : ks) report.rank_rates[k] = hits[k] / n;
  for (const auto& [kind, m] : kind_hits) {
    for (const auto& [k, h] : m) {
      report.per_occlusion[kind][k] = static_cast<double>(h) / report.per_occlusion_count[kind];
    }
  }
  for (const auto& [key, count] : confusion) report.confusion.push_back({key.first, key.second, count});
  report.rank_1 = report.rank_rates.at(1);
  report.rank_2 = report.rank_rates.at(2);
  report.test_count = static_cast<int>(test_set.size());
  return report;
}

}  // namespace occface
