// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails. Tolerances are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "occface/experiment.hpp"
#include "occface/synthetic.hpp"

namespace {

using namespace occface;
using Clock = std::chrono::steady_clock;

constexpr double kDeg = std::numbers::pi / 180.0;

// Criterion 1
constexpr int kIcpCases = 20;
constexpr double kMaxRotationDeg = 25.0;
constexpr double kMaxTranslationFraction = 0.10;
constexpr double kRotationTolDeg = 0.5;
constexpr double kTranslationTol = 1e-2;
constexpr double kExactRmseTol = 1e-6;
constexpr double kCaseSeconds = 5.0;
// Criterion 2
constexpr double kNoiseSigma = 0.002;
constexpr double kRmseLow = 0.001;
constexpr double kRmseHigh = 0.003;
constexpr double kBandShare = 0.90;
// Criterion 3
constexpr double kPixelTol = 1e-6;
constexpr double kErrorTol = 1e-6;
constexpr double kProjectionTol = 1e-10;
// Criterion 4
constexpr double kMeanIouMin = 0.6;
constexpr double kWorstIouMin = 0.4;
constexpr double kHeightToResidual = 5.0;
// Criterion 5
constexpr double kPlaneTol = 1e-9;
constexpr double kSphereTol = 0.02;
// Criterion 6
constexpr int kPipelineSeeds = 5;
constexpr int kStrictWinsNeeded = 3;
constexpr double kPipelineSeconds = 120.0;
// Criterion 7
constexpr double kGradientTol = 1e-5;
constexpr double kLossSlack = 1e-12;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

PointCloudd face_cloud(std::uint64_t seed, const GridSpec& grid) {
  return range_image_to_cloud(render_face(make_face_shape(grid, 0.1, seed), grid), grid.pixel_spacing);
}

// Rotation of magnitude `angle` about a random axis through the cloud centroid,
// followed by a random shift of length `shift`.
RigidTransformd random_motion(const PointCloudd& cloud, double angle, double shift, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d axis(n(rng), n(rng), n(rng));
  Eigen::Vector3d dir(n(rng), n(rng), n(rng));
  const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  const Eigen::Vector3d c = cloud.centroid();
  return RigidTransformd(r, c - r * c + shift * dir.normalized());
}

std::vector<ScanInput> to_inputs(const std::vector<SyntheticScan>& scans) {
  std::vector<ScanInput> out;
  for (const auto& s : scans) {
    std::optional<OcclusionMask> mask;
    if (s.occlusion) mask = s.truth_mask;
    out.push_back({s.name, format_scan_name(s.name) + ".xyz", s.cloud, s.pose, mask, s.clean});
  }
  return out;
}

Outcome icp_recovery() {
  const GridSpec grid;
  double worst_rot = 0, worst_t = 0, worst_rmse = 0, worst_secs = 0;
  for (int i = 0; i < kIcpCases; ++i) {
    std::mt19937_64 rng(1000 + i);
    const PointCloudd model = face_cloud(100 + i, grid);
    const Eigen::Vector3d extent = model.points().rowwise().maxCoeff() - model.points().rowwise().minCoeff();
    const double angle = kMaxRotationDeg * kDeg * (i + 1) / kIcpCases;
    const double shift = kMaxTranslationFraction * extent.maxCoeff() * std::uniform_real_distribution<>(0, 1)(rng);
    const RigidTransformd truth = random_motion(model, angle, shift, rng);
    const PointCloudd probe = apply_transform(model, truth);
    const auto t0 = Clock::now();
    const IcpResult r = icp(probe, model);
    worst_secs = std::max(worst_secs, seconds_since(t0));
    const RigidTransformd err = r.transform * truth;
    worst_rot = std::max(worst_rot, err.rotation_angle() / kDeg);
    worst_t = std::max(worst_t, err.translation().norm());
    worst_rmse = std::max(worst_rmse, r.final_rmse_all);
  }
  const bool ok = worst_rot <= kRotationTolDeg && worst_t <= kTranslationTol && worst_rmse < kExactRmseTol &&
                  worst_secs < kCaseSeconds;
  return {ok, fmt("%d cases up to %.0f deg: worst rotation %.2e deg, translation %.2e, RMSE %.2e, %.3f s/case",
                  kIcpCases, kMaxRotationDeg, worst_rot, worst_t, worst_rmse, worst_secs)};
}

Outcome rmse_band() {
  const GridSpec grid;
  int in_band = 0;
  double lo = 1e9, hi = 0;
  for (int i = 0; i < kIcpCases; ++i) {
    std::mt19937_64 rng(2000 + i);
    const PointCloudd model = face_cloud(200 + i, grid);
    PointCloudd::Matrix noisy = model.points();
    std::normal_distribution<double> noise(0.0, kNoiseSigma);
    for (Eigen::Index k = 0; k < noisy.cols(); ++k) noisy(2, k) += noise(rng);
    const RigidTransformd truth = random_motion(model, 10.0 * kDeg, 2.0, rng);
    const IcpResult r = icp(apply_transform(PointCloudd(noisy), truth), model);
    const double v = r.final_rmse_all;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    if (v >= kRmseLow && v <= kRmseHigh) ++in_band;
  }
  const bool ok = in_band >= static_cast<int>(std::ceil(kBandShare * kIcpCases));
  return {ok, fmt("noise sigma %.3f: %d/%d seeds in [%.3f, %.3f], observed %.5f..%.5f", kNoiseSigma, in_band,
                  kIcpCases, kRmseLow, kRmseHigh, lo, hi)};
}

Outcome gappy_exactness() {
  const GridSpec grid{32, 32, 1.0};
  std::vector<RangeImage> faces;
  for (int s = 0; s < 12; ++s) faces.push_back(render_face(make_face_shape(grid, 0.2, 300 + s), grid));
  const PcaBasis basis = train_pca(faces, 8);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_pixel = 0, worst_e = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd c(basis.components());
    for (int k = 0; k < c.size(); ++k) c(k) = n(rng) * std::sqrt(basis.eigenvalues(k));
    const RangeImage truth = reconstruct(basis, c);
    const double share = 0.5 * (trial + 1) / 20.0;
    BitGrid bits = BitGrid::Zero(grid.height, grid.width);
    if (trial % 2 == 0) {
      for (Eigen::Index i = 0; i < bits.size(); ++i) bits.data()[i] = u(rng) < share;
    } else {
      const int rows = static_cast<int>(share * grid.height);
      bits.topRows(rows).setOnes();
    }
    const RestoredFace restored = restore_face(truth, OcclusionMask(bits), basis);
    worst_pixel = std::max(worst_pixel, (restored.image.depths() - truth.depths()).cwiseAbs().maxCoeff());
    worst_e = std::max(worst_e, restored.error);
  }
  double worst_proj = 0;
  for (int s = 0; s < 5; ++s) {
    const RangeImage face = render_face(make_face_shape(grid, 0.2, 400 + s), grid);
    worst_proj = std::max(worst_proj, (gappy_fit(face, basis).beta - project(basis, face)).cwiseAbs().maxCoeff());
  }
  const bool ok = worst_pixel < kPixelTol && worst_e < kErrorTol && worst_proj <= kProjectionTol;
  return {ok, fmt("up to 50%% masked: worst pixel error %.2e, E %.2e; empty-mask fit vs projection %.2e", worst_pixel,
                  worst_e, worst_proj)};
}

Outcome occlusion_detection() {
  const SyntheticParams params;
  const auto scans = synthesize_dataset(params, 10, 4, 4);
  const MedianFilterConfig median = MedianFilterConfig::Uniform(1);
  std::vector<RangeImage> neutral;
  for (const auto& s : scans) {
    if (!s.occlusion) neutral.push_back(weighted_median_filter(s.canonical, median).image);
  }
  const RangeImage mean = train_pca(neutral, 1).mean_image();
  const ThresholdConfig cfg;
  ThresholdConfig literal;
  literal.tolerance_fraction = 1.0;
  literal.column_floor_fraction = 0.0;

  double iou_sum = 0, iou_min = 1, resid_sq = 0, min_height = 1e300;
  long resid_n = 0;
  int count = 0;
  bool literal_ok = true;
  for (const auto& s : scans) {
    if (!s.occlusion) continue;
    const RangeImage img = weighted_median_filter(s.canonical, median).image;
    const DifferenceMap diff = difference_map(img, mean);
    const double iou = mask_iou(find_threshold_mask(diff, cfg), s.truth_mask);
    iou_sum += iou;
    iou_min = std::min(iou_min, iou);
    ++count;
    min_height = std::min(min_height, 0.92 * s.occlusion->height);
    for (int r = 0; r < img.height(); ++r) {
      for (int c = 0; c < img.width(); ++c) {
        if (s.truth_mask.occluded(r, c)) continue;
        resid_sq += diff.value(r, c) * diff.value(r, c);
        ++resid_n;
      }
    }
    // Literal rule: exactly the column maxima.
    const OcclusionMask marks = find_threshold_mask(diff, literal);
    const Eigen::VectorXd colmax = diff.values().colwise().maxCoeff().transpose();
    for (int r = 0; r < img.height(); ++r) {
      for (int c = 0; c < img.width(); ++c) {
        const bool expect = colmax(c) > 0 && diff.value(r, c) == colmax(c);
        literal_ok = literal_ok && marks.occluded(r, c) == expect;
      }
    }
  }
  const double residual = std::sqrt(resid_sq / static_cast<double>(resid_n));
  const double mean_iou = iou_sum / count;
  const bool ok = count == 40 && min_height >= kHeightToResidual * residual && mean_iou >= kMeanIouMin &&
                  iou_min >= kWorstIouMin && literal_ok;
  return {ok, fmt("%d scans, min height %.2f = %.1fx residual %.3f: IoU mean %.3f, min %.3f; literal marks %s", count,
                  min_height, min_height / residual, residual, mean_iou, iou_min, literal_ok ? "exact" : "differ")};
}

Outcome normal_analytics() {
  const int w = 48, h = 48;
  DepthGrid plane(h, w), sphere(h, w);
  const double R = 100.0, cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      plane(r, c) = 0.3 * c - 0.7 * r + 5.0;
      const double x = c - cx, y = r - cy;
      sphere(r, c) = std::sqrt(R * R - x * x - y * y);
    }
  }
  const NormalMap pn = surface_normals(RangeImage(plane), 1.0);
  const Eigen::Vector3d pexp = Eigen::Vector3d(-0.3, 0.7, 1.0).normalized();
  double plane_err = 0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) plane_err = std::max(plane_err, (pn.normal(r, c) - pexp).cwiseAbs().maxCoeff());
  const NormalMap sn = surface_normals(RangeImage(sphere), 1.0);
  double sphere_err = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const Eigen::Vector3d expect = Eigen::Vector3d(c - cx, r - cy, sphere(r, c)) / R;
      const double cosang = std::clamp(sn.normal(r, c).dot(expect), -1.0, 1.0);
      sphere_err = std::max(sphere_err, std::acos(cosang));
    }
  }
  const bool ok = plane_err <= kPlaneTol && sphere_err <= kSphereTol;
  return {ok, fmt("plane max component error %.2e; sphere cap (R=%.0f) max angular error %.4f rad", plane_err, R,
                  sphere_err)};
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  const PipelineConfig cfg;
  int strict_wins = 0;
  bool never_worse = true, ranks_ordered = true;
  std::string per_seed;
  for (int seed = 1; seed <= kPipelineSeeds; ++seed) {
    const SyntheticParams params;
    const auto inputs = to_inputs(synthesize_dataset(params, 10, 4, seed));
    const PipelineResult res = run_pipeline(inputs, params.grid.width, params.grid.height, cfg, seed);
    bool strict = true;
    for (const char* feat : {"normal", "pca"}) {
      const auto& with = res.evaluations.at(feat).at("with_restoration");
      const auto& without = res.evaluations.at(feat).at("without_restoration");
      never_worse = never_worse && with.rank_1 >= without.rank_1;
      strict = strict && with.rank_1 > without.rank_1;
      ranks_ordered = ranks_ordered && with.rank_1 <= with.rank_2 && without.rank_1 <= without.rank_2;
    }
    strict_wins += strict ? 1 : 0;
    const auto& nw = res.evaluations.at("normal").at("with_restoration");
    const auto& nwo = res.evaluations.at("normal").at("without_restoration");
    per_seed += fmt(" %.2f/%.2f", nw.rank_1, nwo.rank_1);
  }
  const double secs = seconds_since(t0);
  const bool ok = never_worse && strict_wins >= kStrictWinsNeeded && ranks_ordered && secs < kPipelineSeconds;
  return {ok, fmt("normal rank-1 with/without per seed:%s; strictly better (both features) on %d/%d; rank-1<=rank-2 "
                  "%s; %.1f s for %d runs",
                  per_seed.c_str(), strict_wins, kPipelineSeeds, ranks_ordered ? "yes" : "no", secs, kPipelineSeeds)};
}

Outcome mlp_sanity() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  const int samples = 24, inputs = 6;
  Eigen::MatrixXd x(samples, inputs);
  std::vector<int> targets(samples);
  for (int i = 0; i < samples; ++i) {
    targets[i] = i % 3;
    for (int j = 0; j < inputs; ++j) x(i, j) = n(rng) + (j == targets[i] ? 3.0 : 0.0);
  }
  MlpModel model = init_mlp(inputs, 5, {0, 1, 2}, 11);
  model.b1.setRandom();
  model.b2.setRandom();
  const MlpGradient g = mlp_loss_and_gradient(model, x, targets);
  double worst_rel = 0;
  std::uniform_int_distribution<int> pick_layer(0, 3);
  for (int k = 0; k < 10; ++k) {
    const int layer = pick_layer(rng);
    double* w;
    double analytic;
    Eigen::Index size;
    switch (layer) {
      case 0: size = model.w1.size(); break;
      case 1: size = model.b1.size(); break;
      case 2: size = model.w2.size(); break;
      default: size = model.b2.size(); break;
    }
    const auto idx = std::uniform_int_distribution<Eigen::Index>(0, size - 1)(rng);
    switch (layer) {
      case 0: w = model.w1.data() + idx; analytic = g.w1.data()[idx]; break;
      case 1: w = model.b1.data() + idx; analytic = g.b1.data()[idx]; break;
      case 2: w = model.w2.data() + idx; analytic = g.w2.data()[idx]; break;
      default: w = model.b2.data() + idx; analytic = g.b2.data()[idx]; break;
    }
    const double h = 1e-5, saved = *w;
    *w = saved + h;
    const double up = mlp_loss_and_gradient(model, x, targets).loss;
    *w = saved - h;
    const double down = mlp_loss_and_gradient(model, x, targets).loss;
    *w = saved;
    const double numeric = (up - down) / (2 * h);
    const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-8});
    worst_rel = std::max(worst_rel, rel);
  }

  std::vector<LabeledFeature> blobs;
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    Eigen::VectorXd v(2);
    v << n(rng) * 0.5 + (label ? 2.0 : -2.0), n(rng) * 0.5;
    blobs.push_back({label, OcclusionKind::kNone, v, ""});
  }
  TrainConfig tc;
  tc.kind = ClassifierKind::kMlp;
  tc.hidden_units = 8;
  tc.epochs = 500;
  tc.learning_rate = 0.1;
  const ClassifierModel trained = train(blobs, tc);
  const auto& hist = std::get<MlpModel>(trained.model).loss_history;
  double worst_rise = 0;
  for (std::size_t i = 1; i < hist.size(); ++i) worst_rise = std::max(worst_rise, hist[i] - hist[i - 1]);
  int correct = 0;
  for (const auto& b : blobs) correct += classify(trained, b.vector).front().label == b.subject_id ? 1 : 0;
  const bool ok = worst_rel <= kGradientTol && worst_rise <= kLossSlack && correct == static_cast<int>(blobs.size());
  return {ok, fmt("worst relative gradient error %.2e over 10 weights; largest loss rise %.2e over %zu epochs; "
                  "training accuracy %d/%zu",
                  worst_rel, worst_rise, hist.size(), correct, blobs.size())};
}

Outcome determinism() {
  const SyntheticParams params;
  const auto inputs = to_inputs(synthesize_dataset(params, 10, 4, 9));
  PipelineConfig serial;
  serial.workers = 1;
  PipelineConfig pooled;
  pooled.workers = 4;
  const std::string a = run_pipeline(inputs, params.grid.width, params.grid.height, serial, 9).report.dump();
  const std::string b = run_pipeline(inputs, params.grid.width, params.grid.height, serial, 9).report.dump();
  const std::string c = run_pipeline(inputs, params.grid.width, params.grid.height, pooled, 9).report.dump();
  const bool ok = a == b && a == c;
  return {ok, fmt("report of %zu bytes; repeat run %s, 4-worker run %s", a.size(), a == b ? "identical" : "differs",
                  a == c ? "identical" : "differs")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"ICP transform recovery", icp_recovery},
      {"Post-registration RMSE band", rmse_band},
      {"Gappy PCA exactness", gappy_exactness},
      {"Occlusion detection", occlusion_detection},
      {"Normal analytics", normal_analytics},
      {"Restoration improves recognition", end_to_end},
      {"MLP gradient and loss", mlp_sanity},
      {"Pipeline determinism", determinism},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o{false, ""};
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %d. %s: %s\n", o.pass ? "PASS" : "FAIL", index, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
