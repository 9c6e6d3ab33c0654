// Command-line front end for the occlusion-robust face pipeline.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "occface/config.hpp"
#include "occface/dataset_io.hpp"
#include "occface/experiment.hpp"
#include "occface/serialization.hpp"
#include "occface/synthetic.hpp"

namespace {

using nlohmann::json;
using occface::fs::path;
using Clock = std::chrono::steady_clock;

constexpr int kReportVersion = 1;

struct GlobalOptions {
  std::string config_path;
  std::string report_dir;
  std::uint64_t seed = 1;
  int workers = -1;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

occface::PipelineConfig load_pipeline_config(const GlobalOptions& g) {
  occface::PipelineConfig cfg = g.config_path.empty() ? occface::PipelineConfig{} : occface::load_config(g.config_path);
  if (g.workers >= 0) cfg.workers = g.workers;
  cfg.validate();
  return cfg;
}

// Reports carry deterministic content plus a separate "timings" object that is
// excluded from reproducibility comparisons.
void emit_report(const GlobalOptions& g, const std::string& command, json body, const json& timings) {
  json report = {{"version", kReportVersion}, {"command", command}};
  report.update(body);
  report["timings"] = timings;
  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  if (!g.report_dir.empty()) {
    occface::fs::create_directories(g.report_dir);
    occface::write_file_atomic(path(g.report_dir) / (command + "_report.json"), text);
  }
}

void write_json(const path& p, const json& j) { occface::write_file_atomic(p, j.dump(2) + "\n"); }

json read_json(const path& p) {
  const std::string text = occface::read_file(p);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw occface::IoError(p.string() + ": " + e.what());
  }
}

std::vector<int> parse_ranks(const std::string& text) {
  std::vector<int> ranks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int k = std::stoi(item, &used);
      if (used != item.size() || k < 1) throw std::invalid_argument(item);
      ranks.push_back(k);
    } catch (const std::exception&) {
      throw occface::ValidationError("invalid rank '" + item + "'");
    }
  }
  if (ranks.empty()) throw occface::ValidationError("no ranks given");
  return ranks;
}

int error_exit(int code, const std::string& kind, const std::string& message) {
  json err = {{"error", {{"version", kReportVersion}, {"code", code}, {"kind", kind}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occlusion-robust 3D face processing"};
  app.require_subcommand(1);
  GlobalOptions g;
  if (const char* env = std::getenv("OCCFACE_REPORT_DIR")) g.report_dir = env;
  app.add_option("--config", g.config_path, "Pipeline config file (JSON)");
  app.add_option("--report-dir", g.report_dir, "Directory for JSON reports (default: $OCCFACE_REPORT_DIR)");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--workers", g.workers, "Worker threads (0 = hardware concurrency)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
  std::string synth_out;
  int synth_subjects = 10, synth_occlusions = 4;
  occface::SyntheticParams sp;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--subjects", synth_subjects, "Number of subjects");
  synth->add_option("--occlusions", synth_occlusions, "Occluded scans per subject");
  synth->add_option("--width", sp.grid.width, "Grid width");
  synth->add_option("--height", sp.grid.height, "Grid height");
  synth->add_option("--identity-variation", sp.identity_variation, "Relative shape variation between subjects");
  synth->add_option("--noise", sp.noise_sigma, "Depth noise sigma");
  synth->add_option("--occlusion-height", sp.occlusion_height, "Occluder depth offset");
  synth->add_option("--max-rotation", sp.max_rotation_deg, "Pose rotation bound per axis (degrees)");
  synth->add_option("--max-translation", sp.max_translation, "Pose translation bound per axis");

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Project a point cloud to a range image and median-filter it");
  std::string pre_in, pre_out;
  int grid_w = 48, grid_h = 48;
  pre->add_option("--input", pre_in, "Point cloud (.xyz) or range image (.pgm)")->required();
  pre->add_option("--output", pre_out, "Output range image (.pgm)")->required();
  pre->add_option("--width", grid_w, "Grid width for point cloud input");
  pre->add_option("--height", grid_h, "Grid height for point cloud input");

  // register
  auto* reg = app.add_subcommand("register", "Rigidly align a probe cloud to a model cloud with ICP");
  std::string reg_probe, reg_model, reg_out;
  reg->add_option("--probe", reg_probe, "Probe point cloud")->required();
  reg->add_option("--model", reg_model, "Model point cloud")->required();
  reg->add_option("--output", reg_out, "Write the aligned probe cloud here");

  // detect
  auto* det = app.add_subcommand("detect", "Detect occluded pixels against a mean face");
  std::string det_image, det_mean, det_diff, det_mask;
  det->add_option("--image", det_image, "Registered range image")->required();
  det->add_option("--mean", det_mean, "Mean face range image")->required();
  det->add_option("--diff-out", det_diff, "Difference map output (.pgm)");
  det->add_option("--mask-out", det_mask, "Occlusion mask output (.pgm)");

  // restore
  auto* res = app.add_subcommand("restore", "Fill occluded pixels with gappy PCA");
  std::string res_basis, res_image, res_mask, res_out;
  res->add_option("--basis", res_basis, "PCA basis file")->required();
  res->add_option("--image", res_image, "Occluded range image")->required();
  res->add_option("--mask", res_mask, "Occlusion mask (.pgm)");
  res->add_option("--output", res_out, "Restored range image (.pgm)");

  // features
  auto* feat = app.add_subcommand("features", "Extract a surface-normal feature vector");
  std::string feat_image, feat_out, feat_ppm;
  feat->add_option("--image", feat_image, "Range image")->required();
  feat->add_option("--output", feat_out, "Feature vector text file")->required();
  feat->add_option("--normal-map", feat_ppm, "False-color normal map (.ppm)");

  // train
  auto* trn = app.add_subcommand("train", "Train a classifier from features or a PCA basis from faces");
  std::string trn_features, trn_model_out, trn_basis_out, trn_kind;
  std::vector<std::string> trn_faces;
  bool trn_split = false;
  trn->add_option("--features", trn_features, "Feature set JSON");
  trn->add_option("--model-out", trn_model_out, "Classifier output JSON");
  trn->add_option("--classifier", trn_kind, "nearest_neighbor | mlp");
  trn->add_flag("--split", trn_split, "Train only on the training side of the seeded split");
  trn->add_option("--faces", trn_faces, "Complete range images for the PCA basis");
  trn->add_option("--basis-out", trn_basis_out, "PCA basis output");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Rank-k evaluation of a trained classifier");
  std::string ev_model, ev_features, ev_ranks = "1,2";
  bool ev_split = false;
  ev->add_option("--model", ev_model, "Classifier JSON")->required();
  ev->add_option("--features", ev_features, "Feature set JSON")->required();
  ev->add_option("--ranks", ev_ranks, "Comma-separated ranks");
  ev->add_flag("--split", ev_split, "Evaluate only on the test side of the seeded split");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run every stage over a manifest and compare feature variants");
  std::string pipe_manifest, pipe_out;
  bool pipe_dump = false;
  pipe->add_option("--manifest", pipe_manifest, "Dataset manifest.json")->required();
  pipe->add_option("--out", pipe_out, "Output directory")->required();
  pipe->add_flag("--dump-images", pipe_dump, "Write intermediate images for every scan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return error_exit(2, "usage", e.what());
  }

  try {
    const auto t0 = Clock::now();
    if (*synth) {
      const occface::Manifest m =
          occface::generate_synthetic_dataset(sp, synth_subjects, synth_occlusions, g.seed, synth_out);
      emit_report(g, "synth",
                  {{"seed", g.seed},
                   {"output", synth_out},
                   {"params", sp},
                   {"n_subjects", m.n_subjects},
                   {"occlusions_per_subject", m.occlusions_per_subject},
                   {"scan_count", m.scans.size()}},
                  {{"seconds", seconds_since(t0)}});
    } else if (*pre) {
      const auto cfg = load_pipeline_config(g);
      const path in(pre_in);
      occface::RangeImage img = in.extension() == ".pgm"
                                    ? occface::load_range_image(in)
                                    : occface::cloud_to_range_image(occface::load_point_cloud(in), grid_w, grid_h,
                                                                    cfg.pixel_spacing)
                                          .image;
      const auto filtered = occface::weighted_median_filter(img, cfg.median);
      occface::save_range_image(pre_out, filtered.image);
      emit_report(g, "preprocess",
                  {{"input", pre_in},
                   {"output", pre_out},
                   {"width", img.width()},
                   {"height", img.height()},
                   {"valid_pixels", filtered.image.valid_count()},
                   {"passthrough_pixels", filtered.passthrough_pixels}},
                  {{"seconds", seconds_since(t0)}});
    } else if (*reg) {
      const auto cfg = load_pipeline_config(g);
      const auto probe = occface::load_point_cloud(reg_probe);
      const auto model = occface::load_point_cloud(reg_model);
      const auto t_icp = Clock::now();
      const occface::IcpResult r = occface::icp(probe, model, cfg.icp);
      const double secs = seconds_since(t_icp);
      if (!reg_out.empty()) occface::save_point_cloud(reg_out, occface::apply_transform(probe, r.transform));
      emit_report(g, "register", {{"probe", reg_probe}, {"model", reg_model}, {"result", r}},
                  {{"seconds", secs}, {"total_seconds", seconds_since(t0)}});
    } else if (*det) {
      const auto cfg = load_pipeline_config(g);
      const auto d = occface::detect_occlusions(occface::load_range_image(det_image),
                                                occface::load_range_image(det_mean), cfg.threshold);
      if (!det_diff.empty()) {
        occface::save_range_image(det_diff, occface::RangeImage(d.diff.values(), d.diff.validity()));
      }
      if (!det_mask.empty()) occface::save_mask(det_mask, d.mask);
      const double pixels = static_cast<double>(d.mask.width()) * d.mask.height();
      emit_report(g, "detect",
                  {{"image", det_image},
                   {"threshold", occface::config_to_json(cfg)["occlusion"]},
                   {"occluded_pixels", d.mask.occluded_count()},
                   {"occluded_fraction", d.mask.occluded_count() / pixels},
                   {"components", d.edges.component_count},
                   {"boundary_pixels", d.edges.indices.size()}},
                  {{"seconds", seconds_since(t0)}});
    } else if (*res) {
      const auto basis = occface::load_basis(res_basis);
      const auto img = occface::load_range_image(res_image);
      const occface::OcclusionMask mask =
          res_mask.empty() ? occface::OcclusionMask(img.width(), img.height()) : occface::load_mask(res_mask);
      const auto restored = occface::restore_face(img, mask, basis);
      if (!res_out.empty()) occface::save_range_image(res_out, restored.image);
      emit_report(g, "restore",
                  {{"image", res_image},
                   {"components", basis.components()},
                   {"observed_pixels", restored.coefficients.observed_count},
                   {"beta", occface::vector_to_json(restored.coefficients.beta)},
                   {"error", restored.error}},
                  {{"seconds", seconds_since(t0)}});
    } else if (*feat) {
      const auto cfg = load_pipeline_config(g);
      const auto normals = occface::surface_normals(occface::load_range_image(feat_image), cfg.pixel_spacing);
      const Eigen::VectorXd v = occface::feature_vector(normals, cfg.downsample_factor);
      occface::save_vector_text(feat_out, v);
      if (!feat_ppm.empty()) occface::save_normal_map_ppm(feat_ppm, normals);
      emit_report(g, "features",
                  {{"image", feat_image},
                   {"output", feat_out},
                   {"downsample_factor", cfg.downsample_factor},
                   {"length", v.size()},
                   {"valid_normals", normals.valid.count()}},
                  {{"seconds", seconds_since(t0)}});
    } else if (*trn) {
      auto cfg = load_pipeline_config(g);
      if (trn_features.empty() == trn_faces.empty()) {
        throw occface::ValidationError("train needs exactly one of --features or --faces");
      }
      if (!trn_features.empty()) {
        if (trn_model_out.empty()) throw occface::ValidationError("--model-out is required with --features");
        if (!trn_kind.empty()) cfg.classifier.kind = occface::parse_classifier_kind(trn_kind);
        auto items = occface::feature_set_from_json(read_json(trn_features));
        if (trn_split) items = occface::split_dataset(items, cfg.test_fraction, g.seed).train;
        const auto model = occface::train(items, cfg.classifier);
        write_json(trn_model_out, occface::model_to_json(model));
        emit_report(g, "train",
                    {{"features", trn_features},
                     {"classifier", occface::to_string(model.kind())},
                     {"train_count", items.size()},
                     {"input_size", model.input_size()},
                     {"split", trn_split},
                     {"seed", g.seed}},
                    {{"seconds", seconds_since(t0)}});
      } else {
        if (trn_basis_out.empty()) throw occface::ValidationError("--basis-out is required with --faces");
        std::vector<occface::RangeImage> faces;
        for (const auto& f : trn_faces) faces.push_back(occface::load_range_image(f));
        const auto basis = cfg.pca_components > 0 ? occface::train_pca(faces, cfg.pca_components)
                                                  : occface::train_pca_by_energy(faces, cfg.pca_energy);
        occface::save_basis(trn_basis_out, basis);
        emit_report(g, "train",
                    {{"faces", trn_faces.size()},
                     {"components", basis.components()},
                     {"eigenvalues", occface::vector_to_json(basis.eigenvalues)}},
                    {{"seconds", seconds_since(t0)}});
      }
    } else if (*ev) {
      const auto cfg = load_pipeline_config(g);
      const auto model = occface::model_from_json(read_json(ev_model));
      auto items = occface::feature_set_from_json(read_json(ev_features));
      if (ev_split) items = occface::split_dataset(items, cfg.test_fraction, g.seed).test;
      const auto rep = occface::evaluate(model, items, parse_ranks(ev_ranks));
      emit_report(g, "evaluate", {{"model", ev_model}, {"features", ev_features}, {"split", ev_split},
                                  {"seed", g.seed}, {"evaluation", rep}},
                  {{"seconds", seconds_since(t0)}});
    } else if (*pipe) {
      const auto cfg = load_pipeline_config(g);
      const path manifest_path(pipe_manifest);
      const occface::Manifest m = occface::load_manifest(manifest_path);
      const auto scans = occface::load_manifest_scans(m, manifest_path.parent_path());
      const path out(pipe_out);
      occface::fs::create_directories(out / "features");
      const auto result = occface::run_pipeline(scans, m.params.grid.width, m.params.grid.height, cfg, g.seed,
                                                pipe_dump ? std::optional<path>(out / "artifacts") : std::nullopt);
      for (const auto& [name, variants] : result.features) {
        for (const auto& [variant, items] : variants) {
          write_json(out / "features" / (name + "_" + variant + ".json"), occface::feature_set_to_json(items));
        }
      }
      occface::save_basis(out / "basis.bin", result.basis);
      std::string csv = "subject_id,mean_final_rmse\n";
      for (const auto& row : result.report["registration"]["per_subject"]) {
        char line[96];
        std::snprintf(line, sizeof line, "%d,%.9g\n", row["subject_id"].get<int>(),
                      row["mean_final_rmse"].get<double>());
        csv += line;
      }
      occface::write_file_atomic(out / "registration_rmse.csv", csv);
      const std::string table = occface::comparison_table(result);
      occface::write_file_atomic(out / "comparison_table.txt", table);
      // report.json is byte-stable for fixed inputs; wall-clock data goes to timings.json.
      write_json(out / "report.json", result.report);
      write_json(out / "timings.json", result.timings);
      std::cerr << table;
      emit_report(g, "pipeline", {{"manifest", pipe_manifest}, {"output", pipe_out}, {"report", result.report}},
                  result.timings);
    }
  } catch (const occface::Error& e) {
    return error_exit(static_cast<int>(e.category()), e.kind(), e.what());
  } catch (const occface::fs::filesystem_error& e) {
    return error_exit(3, "io", e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_exit(3, "format", e.what());
  } catch (const std::exception& e) {
    return error_exit(1, "internal", e.what());
  }
  return 0;
}
