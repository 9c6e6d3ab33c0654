#include "occface/serialization.hpp"

namespace occface {

namespace {

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_rows(const json& rows, Eigen::Index cols_hint = -1) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index cols = n > 0 ? static_cast<Eigen::Index>(rows.at(0).size()) : std::max<Eigen::Index>(cols_hint, 0);
  Eigen::MatrixXd m(n, cols);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = rows.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ValidationError("ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

}  // namespace

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

void to_json(json& j, const RigidTransformd& t) {
  const Eigen::Vector3d a = t.angles();
  json m = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m.push_back(t.rotation()(r, c));
  j = json{{"angles", {a.x(), a.y(), a.z()}},
           {"translation", {t.translation().x(), t.translation().y(), t.translation().z()}},
           {"matrix", m}};
}

void from_json(const json& j, RigidTransformd& t) {
  Eigen::Vector3d tr(j.at("translation").at(0).get<double>(), j.at("translation").at(1).get<double>(),
                     j.at("translation").at(2).get<double>());
  if (j.contains("matrix")) {
    Eigen::Matrix3d r;
    for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = j.at("matrix").at(static_cast<std::size_t>(i)).get<double>();
    t = RigidTransformd(r, tr);
  } else {
    const auto& a = j.at("angles");
    t = RigidTransformd::FromAngles(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>(), tr);
  }
}

void to_json(json& j, const IcpResult& r) {
  j = json{{"transform", r.transform},
           {"initial_rmse", r.initial_rmse},
           {"rmse_history", r.rmse_history},
           {"iterations", r.iterations_run},
           {"converged", r.converged},
           {"final_rmse", r.final_rmse},
           {"final_rmse_all", r.final_rmse_all}};
}

void to_json(json& j, const OcclusionSpec& s) {
  j = json{{"kind", to_string(s.kind)}, {"center", {s.cx, s.cy}}, {"radii", {s.rx, s.ry}},
           {"height", s.height},         {"phase", s.phase}};
}

void from_json(const json& j, OcclusionSpec& s) {
  s.kind = parse_occlusion_kind(j.at("kind").get<std::string>());
  s.cx = j.at("center").at(0).get<double>();
  s.cy = j.at("center").at(1).get<double>();
  s.rx = j.at("radii").at(0).get<double>();
  s.ry = j.at("radii").at(1).get<double>();
  s.height = j.at("height").get<double>();
  s.phase = j.at("phase").get<double>();
}

void to_json(json& j, const SyntheticParams& p) {
  j = json{{"grid", {{"width", p.grid.width}, {"height", p.grid.height}, {"pixel_spacing", p.grid.pixel_spacing}}},
           {"identity_variation", p.identity_variation},
           {"noise_sigma", p.noise_sigma},
           {"spike_fraction", p.spike_fraction},
           {"spike_height", p.spike_height},
           {"occlusion_height", p.occlusion_height},
           {"max_rotation_deg", p.max_rotation_deg},
           {"max_translation", p.max_translation}};
}

void from_json(const json& j, SyntheticParams& p) {
  const SyntheticParams d;
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    p.grid.width = g.value("width", d.grid.width);
    p.grid.height = g.value("height", d.grid.height);
    p.grid.pixel_spacing = g.value("pixel_spacing", d.grid.pixel_spacing);
  }
  p.identity_variation = j.value("identity_variation", d.identity_variation);
  p.noise_sigma = j.value("noise_sigma", d.noise_sigma);
  p.spike_fraction = j.value("spike_fraction", d.spike_fraction);
  p.spike_height = j.value("spike_height", d.spike_height);
  p.occlusion_height = j.value("occlusion_height", d.occlusion_height);
  p.max_rotation_deg = j.value("max_rotation_deg", d.max_rotation_deg);
  p.max_translation = j.value("max_translation", d.max_translation);
}

void to_json(json& j, const EvaluationReport& r) {
  json rates = json::object();
  for (const auto& [k, v] : r.rank_rates) rates["rank_" + std::to_string(k)] = v;
  json per = json::object();
  for (const auto& [kind, m] : r.per_occlusion) {
    json entry = {{"count", r.per_occlusion_count.at(kind)}};
    for (const auto& [k, v] : m) entry["rank_" + std::to_string(k)] = v;
    per[to_string(kind)] = entry;
  }
  json confusion = json::array();
  for (const auto& c : r.confusion) confusion.push_back({{"truth", c.truth}, {"predicted", c.predicted}, {"count", c.count}});
  j = json{{"version", 1},
           {"ks", r.ks},
           {"rank_1", r.rank_1},
           {"rank_2", r.rank_2},
           {"rank_rates", rates},
           {"per_occlusion", per},
           {"confusion", confusion},
           {"test_count", r.test_count},
           {"split", {{"test_fraction", r.test_fraction}, {"seed", r.seed}}}};
}

void to_json(json& j, const LabeledFeature& f) {
  j = json{{"subject_id", f.subject_id}, {"kind", to_string(f.kind)}, {"source", f.source},
           {"vector", vector_to_json(f.vector)}};
}

void from_json(const json& j, LabeledFeature& f) {
  f.subject_id = j.at("subject_id").get<int>();
  f.kind = parse_occlusion_kind(j.value("kind", std::string("none")));
  f.source = j.value("source", std::string());
  f.vector = vector_from_json(j.at("vector"));
}

json feature_set_to_json(const std::vector<LabeledFeature>& items) {
  return json{{"version", 1}, {"items", items}};
}

std::vector<LabeledFeature> feature_set_from_json(const json& j) {
  if (j.value("version", 0) != 1) throw ValidationError("unsupported feature set version");
  return j.at("items").get<std::vector<LabeledFeature>>();
}

json model_to_json(const ClassifierModel& model) {
  if (const auto* nn = std::get_if<NearestNeighborModel>(&model.model)) {
    return json{{"version", 1}, {"kind", "nearest_neighbor"}, {"labels", nn->labels}, {"gallery", matrix_rows(nn->gallery)}};
  }
  const auto& m = std::get<MlpModel>(model.model);
  return json{{"version", 1},
              {"kind", "mlp"},
              {"classes", m.classes},
              {"seed", m.seed},
              {"epochs_trained", m.epochs_trained},
              {"learning_rate", m.learning_rate},
              {"final_loss", m.final_loss},
              {"w1", matrix_rows(m.w1)},
              {"b1", vector_to_json(m.b1)},
              {"w2", matrix_rows(m.w2)},
              {"b2", vector_to_json(m.b2)}};
}

ClassifierModel model_from_json(const json& j) {
  if (j.value("version", 0) != 1) throw ValidationError("unsupported model version");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "nearest_neighbor") {
    NearestNeighborModel nn;
    nn.labels = j.at("labels").get<std::vector<int>>();
    nn.gallery = matrix_from_rows(j.at("gallery"));
    if (nn.gallery.rows() == 0 || static_cast<std::size_t>(nn.gallery.rows()) != nn.labels.size()) {
      throw ValidationError("nearest neighbor model: gallery/labels mismatch");
    }
    return {std::move(nn)};
  }
  if (kind == "mlp") {
    MlpModel m;
    m.classes = j.at("classes").get<std::vector<int>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.epochs_trained = j.at("epochs_trained").get<int>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.final_loss = j.at("final_loss").get<double>();
    m.w1 = matrix_from_rows(j.at("w1"));
    m.b1 = vector_from_json(j.at("b1"));
    m.w2 = matrix_from_rows(j.at("w2"));
    m.b2 = vector_from_json(j.at("b2"));
    if (m.w1.rows() != m.b1.size() || m.w2.cols() != m.w1.rows() || m.w2.rows() != m.b2.size() ||
        static_cast<std::size_t>(m.w2.rows()) != m.classes.size()) {
      throw ValidationError("mlp model: inconsistent layer shapes");
    }
    if (!m.w1.allFinite() || !m.w2.allFinite()) throw ValidationError("mlp model: non-finite weights");
    return {std::move(m)};
  }
  throw ValidationError("unknown classifier kind '" + kind + "'");
}

}  // namespace occface
