#pragma once

#include <json.hpp>

#include "occface/core.hpp"
#include "occface/recognition.hpp"
#include "occface/registration.hpp"
#include "occface/synthetic.hpp"

namespace occface {

using nlohmann::json;

/// {"angles": [ax, ay, az], "translation": [...], "matrix": [9 values, row-major]}.
/// Loading uses the matrix.
void to_json(json& j, const RigidTransformd& t);
void from_json(const json& j, RigidTransformd& t);

void to_json(json& j, const IcpResult& r);

void to_json(json& j, const OcclusionSpec& s);
void from_json(const json& j, OcclusionSpec& s);

void to_json(json& j, const SyntheticParams& p);
void from_json(const json& j, SyntheticParams& p);

void to_json(json& j, const EvaluationReport& r);

void to_json(json& j, const LabeledFeature& f);
void from_json(const json& j, LabeledFeature& f);

/// {"version": 1, "items": [...]}
json feature_set_to_json(const std::vector<LabeledFeature>& items);
std::vector<LabeledFeature> feature_set_from_json(const json& j);

json model_to_json(const ClassifierModel& model);
ClassifierModel model_from_json(const json& j);

json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

}  // namespace occface
