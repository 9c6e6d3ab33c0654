#include "occface/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "occface/parallel.hpp"
#include "occface/serialization.hpp"

namespace occface {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

namespace {

RegisteredScan resample(const PointCloudd& probe, IcpResult fit, int width, int height, const PipelineConfig& cfg) {
  RegisteredScan out;
  out.icp = std::move(fit);
  auto projected = cloud_to_range_image(apply_transform(probe, out.icp.transform), width, height, cfg.pixel_spacing);
  out.dropped_points = projected.dropped;
  if (projected.image.valid_count() == 0) throw EmptyInputError("registered scan falls outside the grid");
  out.image = weighted_median_filter(projected.image, cfg.median).image;
  return out;
}

}  // namespace

RegisteredScan register_to_model(const PointCloudd& probe, const PointCloudd& model, int width, int height,
                                 const PipelineConfig& cfg) {
  return resample(probe, icp(probe, model, cfg.icp), width, height, cfg);
}

PointCloudd unoccluded_points(const PointCloudd& probe, const RigidTransformd& alignment, const OcclusionMask& mask,
                              double pixel_spacing) {
  const Eigen::Matrix3Xd moved = apply_transform(probe, alignment).points();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < moved.cols(); ++i) {
    const double c = std::round(moved(0, i) / pixel_spacing);
    const double r = std::round(moved(1, i) / pixel_spacing);
    const bool on_grid = c >= 0 && r >= 0 && c < mask.width() && r < mask.height();
    if (!on_grid || !mask.occluded(static_cast<int>(r), static_cast<int>(c))) keep.push_back(i);
  }
  PointCloudd::Matrix out(3, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = probe.points().col(keep[k]);
  return PointCloudd(std::move(out));
}

RegisteredScan refine_registration(const PointCloudd& probe, const PointCloudd& model,
                                   const RigidTransformd& previous, const OcclusionMask& mask,
                                   const PipelineConfig& cfg) {
  const PointCloudd kept = unoccluded_points(probe, previous, mask, cfg.pixel_spacing);
  if (kept.size() < 3) throw DegenerateGeometryError("too few unoccluded points to refine registration");
  IcpConfig refine = cfg.icp;
  refine.rejection_fraction = cfg.refine_rejection_fraction;
  refine.initial_transform = previous;
  return resample(probe, icp(kept, model, refine), mask.width(), mask.height(), cfg);
}

Detection detect_occlusions(const RangeImage& candidate, const RangeImage& mean, const ThresholdConfig& cfg) {
  DifferenceMap diff = difference_map(candidate, mean);
  OcclusionMask mask = find_threshold_mask(diff, cfg);
  EdgeResult edges = find_edges(mask, diff);
  return {std::move(diff), std::move(mask), std::move(edges)};
}

std::vector<ScanInput> load_manifest_scans(const Manifest& manifest, const fs::path& dataset_dir) {
  std::vector<ScanInput> out;
  out.reserve(manifest.scans.size());
  for (const auto& e : manifest.scans) {
    out.push_back({e.name, e.file, load_point_cloud(dataset_dir / e.file), e.pose, e.truth_mask,
                   subject_face(manifest.params, e.name.subject_id, manifest.seed)});
  }
  return out;
}

PipelineResult run_pipeline(const std::vector<ScanInput>& scans, int width, int height, const PipelineConfig& cfg,
                            std::uint64_t seed, const std::optional<fs::path>& artifact_dir) {
  cfg.validate();
  const auto t_start = Clock::now();
  PipelineResult result;

  // Neutral scans define the face space.
  std::vector<RangeImage> neutral;
  for (const auto& s : scans) {
    if (s.name.kind != OcclusionKind::kNone) continue;
    auto proj = cloud_to_range_image(s.cloud, width, height, cfg.pixel_spacing);
    if (!proj.image.fully_valid()) {
      throw ValidationError("neutral scan " + s.file + " does not cover the full grid");
    }
    neutral.push_back(weighted_median_filter(proj.image, cfg.median).image);
  }
  if (neutral.size() < 2) throw ValidationError("pipeline needs at least 2 neutral scans");
  result.basis = cfg.pca_components > 0 ? train_pca(neutral, cfg.pca_components)
                                        : train_pca_by_energy(neutral, cfg.pca_energy);
  const RangeImage mean_image = result.basis.mean_image();
  const PointCloudd mean_cloud = upsampled_cloud(mean_image, cfg.pixel_spacing, cfg.model_upsampling);
  const Eigen::Vector3d center((width - 1) / 2.0 * cfg.pixel_spacing, (height - 1) / 2.0 * cfg.pixel_spacing, 0.0);

  if (artifact_dir) {
    for (const char* sub : {"registered", "masks", "diff", "restored", "normals"}) {
      fs::create_directories(*artifact_dir / sub);
    }
    save_basis(*artifact_dir / "basis.bin", result.basis);
    save_range_image(*artifact_dir / "mean_face.pgm", mean_image);
  }

  result.scans.resize(scans.size());
  parallel_for(scans.size(), cfg.workers, [&](std::size_t i) {
    const ScanInput& in = scans[i];
    ScanRecord& rec = result.scans[i];
    rec.name = in.name;
    rec.file = in.file;

    const auto t_reg = Clock::now();
    RegisteredScan reg = register_to_model(in.cloud, mean_cloud, width, height, cfg);
    Detection det = detect_occlusions(reg.image, mean_image, cfg.threshold);
    for (int pass = 0; pass < cfg.refine_passes; ++pass) {
      reg = refine_registration(in.cloud, mean_cloud, reg.icp.transform, det.mask, cfg);
      det = detect_occlusions(reg.image, mean_image, cfg.threshold);
    }
    rec.registration_seconds = seconds_since(t_reg);
    rec.icp = reg.icp;
    if (in.truth_pose) {
      const RigidTransformd residual = reg.icp.transform * *in.truth_pose;
      rec.rotation_error_deg = residual.rotation_angle() * 180.0 / std::numbers::pi;
      rec.translation_error = (residual(center) - center).norm();
    }

    rec.occluded_fraction = static_cast<double>(det.mask.occluded_count()) / static_cast<double>(width * height);
    rec.boundary_components = det.edges.component_count;
    if (in.truth_mask) rec.mask_iou = mask_iou(det.mask, *in.truth_mask);

    const RestoredFace restored = restore_face(reg.image, det.mask, result.basis);
    rec.restoration_error = restored.error;
    if (in.truth_face) rec.restoration_full_error = full_image_error(restored.image, *in.truth_face);

    const NormalMap n_restored = surface_normals(restored.image, cfg.pixel_spacing);
    const NormalMap n_raw = surface_normals(reg.image, cfg.pixel_spacing);
    rec.normal_restored = feature_vector(n_restored, cfg.downsample_factor);
    rec.normal_raw = feature_vector(n_raw, cfg.downsample_factor);
    rec.pca_restored = restored.coefficients.beta;
    rec.pca_raw = gappy_fit(reg.image, result.basis).beta;

    if (artifact_dir) {
      const std::string stem = format_scan_name(in.name);
      save_point_cloud(*artifact_dir / "registered" / (stem + ".xyz"), apply_transform(in.cloud, reg.icp.transform));
      save_mask(*artifact_dir / "masks" / (stem + "_mask.pgm"), det.mask);
      save_range_image(*artifact_dir / "diff" / (stem + "_diff.pgm"),
                       RangeImage(det.diff.values(), det.diff.validity()));
      save_range_image(*artifact_dir / "restored" / (stem + ".pgm"), restored.image);
      save_normal_map_ppm(*artifact_dir / "normals" / (stem + ".ppm"), n_restored);
    }
  });
  const double t_process = seconds_since(t_start);

  // Recognition. split_dataset depends only on labels, kinds, order and seed,
  // so every feature variant gets the same partition.
  auto collect = [&](auto member) {
    std::vector<LabeledFeature> items;
    for (const auto& rec : result.scans) {
      items.push_back({rec.name.subject_id, rec.name.kind, rec.*member, rec.file});
    }
    return items;
  };
  result.features["normal"]["with_restoration"] = collect(&ScanRecord::normal_restored);
  result.features["normal"]["without_restoration"] = collect(&ScanRecord::normal_raw);
  result.features["pca"]["with_restoration"] = collect(&ScanRecord::pca_restored);
  result.features["pca"]["without_restoration"] = collect(&ScanRecord::pca_raw);

  nlohmann::json split_json;
  for (const auto& [feat, variants] : result.features) {
    for (const auto& [variant, items] : variants) {
      const DatasetSplit split = split_dataset(items, cfg.test_fraction, seed);
      if (split.test.empty()) throw ValidationError("split produced an empty test set");
      const ClassifierModel model = train(split.train, cfg.classifier);
      EvaluationReport rep = evaluate(model, split.test, cfg.ranks);
      rep.test_fraction = cfg.test_fraction;
      rep.seed = seed;
      result.evaluations[feat][variant] = std::move(rep);
      if (split_json.is_null()) {
        nlohmann::json test_files = nlohmann::json::array();
        for (const auto& t : split.test) test_files.push_back(t.source);
        split_json = {{"test_fraction", cfg.test_fraction},
                      {"seed", seed},
                      {"train_count", split.train.size()},
                      {"test_count", split.test.size()},
                      {"test_files", test_files},
                      {"unsplittable_subjects", split.unsplittable_subjects}};
      }
    }
  }

  // Report.
  using nlohmann::json;
  json reg_scans = json::array(), det_scans = json::array(), res_scans = json::array();
  std::map<int, std::pair<double, int>> subject_rmse;
  double iou_sum = 0.0, iou_min = 1.0;
  int iou_n = 0;
  json timing_scans = json::array();
  for (const auto& rec : result.scans) {
    json r = {{"scan", rec.file},
              {"subject_id", rec.name.subject_id},
              {"kind", to_string(rec.name.kind)},
              {"iterations", rec.icp.iterations_run},
              {"converged", rec.icp.converged},
              {"initial_rmse", rec.icp.initial_rmse},
              {"final_rmse", rec.icp.final_rmse},
              {"final_rmse_all", rec.icp.final_rmse_all},
              {"transform", rec.icp.transform}};
    if (rec.rotation_error_deg) r["rotation_error_deg"] = *rec.rotation_error_deg;
    if (rec.translation_error) r["translation_error"] = *rec.translation_error;
    reg_scans.push_back(r);
    auto& acc = subject_rmse[rec.name.subject_id];
    acc.first += rec.icp.final_rmse_all;
    acc.second += 1;

    json d = {{"scan", rec.file}, {"occluded_fraction", rec.occluded_fraction},
              {"components", rec.boundary_components}};
    if (rec.mask_iou) {
      d["iou"] = *rec.mask_iou;
      if (rec.name.kind != OcclusionKind::kNone) {
        iou_sum += *rec.mask_iou;
        iou_min = std::min(iou_min, *rec.mask_iou);
        ++iou_n;
      }
    }
    det_scans.push_back(d);
    res_scans.push_back({{"scan", rec.file},
                         {"error", rec.restoration_error},
                         {"full_error", rec.restoration_full_error ? json(*rec.restoration_full_error) : json(nullptr)}});
    timing_scans.push_back({{"scan", rec.file}, {"registration_seconds", rec.registration_seconds}});
  }
  json per_subject = json::array();
  for (const auto& [subject, acc] : subject_rmse) {
    per_subject.push_back({{"subject_id", subject}, {"mean_final_rmse", acc.first / acc.second}});
  }

  json recognition = json::object();
  json table = json::array();
  for (const auto& [feat, variants] : result.evaluations) {
    for (const auto& [variant, rep] : variants) {
      recognition[feat][variant] = rep;
      table.push_back({{"features", feat}, {"restoration", variant == "with_restoration"},
                       {"rank_1", rep.rank_1}, {"rank_2", rep.rank_2}});
    }
  }

  // The worker count changes scheduling only, so it stays out of the report.
  json config = config_to_json(cfg);
  config.erase("workers");
  json eigen = json::array();
  for (Eigen::Index k = 0; k < result.basis.eigenvalues.size(); ++k) eigen.push_back(result.basis.eigenvalues(k));
  result.report = {{"version", 1},
                   {"seed", seed},
                   {"config", config},
                   {"grid", {{"width", width}, {"height", height}}},
                   {"scan_count", scans.size()},
                   {"basis", {{"components", result.basis.components()},
                              {"training_samples", result.basis.training_samples},
                              {"eigenvalues", eigen}}},
                   {"registration", {{"per_scan", reg_scans}, {"per_subject", per_subject}}},
                   {"detection", {{"per_scan", det_scans},
                                  {"mean_iou", iou_n ? json(iou_sum / iou_n) : json(nullptr)},
                                  {"min_iou", iou_n ? json(iou_min) : json(nullptr)}}},
                   {"restoration", {{"per_scan", res_scans}}},
                   {"split", split_json},
                   {"recognition", recognition},
                   {"comparison_table", table}};

  const double total = seconds_since(t_start);
  std::map<int, double> per_subject_seconds;
  for (const auto& rec : result.scans) per_subject_seconds[rec.name.subject_id] += rec.registration_seconds;
  json subj_t = json::array();
  for (const auto& [s, t] : per_subject_seconds) subj_t.push_back({{"subject_id", s}, {"registration_seconds", t}});
  result.timings = {{"workers", cfg.workers},
                    {"total_seconds", total},
                    {"processing_seconds", t_process},
                    {"per_scan", timing_scans},
                    {"per_subject", subj_t}};
  return result;
}

std::string comparison_table(const PipelineResult& result) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %-22s %8s %8s\n", "features", "restoration", "rank-1", "rank-2");
  out << line;
  for (const auto& [feat, variants] : result.evaluations) {
    for (const auto& [variant, rep] : variants) {
      std::snprintf(line, sizeof line, "%-10s %-22s %7.2f%% %7.2f%%\n", feat.c_str(), variant.c_str(),
                    100.0 * rep.rank_1, 100.0 * rep.rank_2);
      out << line;
    }
  }
  return out.str();
}

}  // namespace occface
