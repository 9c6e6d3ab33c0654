#include "occface/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "occface/serialization.hpp"

namespace occface {

namespace {

std::mt19937_64 seeded(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

double unit_scale(const GridSpec& g) { return std::min(g.width, g.height) / 48.0; }

}  // namespace

double FaceShape::height_at(double col, double row) const {
  double z = 0.0;
  for (const auto& b : bumps) {
    const double dx = (col - b.cx) / b.sx;
    const double dy = (row - b.cy) / b.sy;
    z += b.amplitude * std::exp(-0.5 * (dx * dx + dy * dy));
  }
  return z;
}

FaceShape make_face_shape(const GridSpec& grid, double identity_variation, std::uint64_t subject_seed) {
  const double s = unit_scale(grid);
  const double cx = (grid.width - 1) / 2.0;
  const double cy = (grid.height - 1) / 2.0;
  // Template: head dome, nose, brows, eye sockets, cheeks, lips, chin.
  std::vector<Bump> tmpl = {
      {cx, cy, 0.30 * grid.width, 0.5 * grid.height, 18.0},
      {cx, cy - 1 * s, 2.2 * s, 6 * s, 7.0},
      {cx, cy + 4 * s, 2.5 * s, 2.5 * s, 4.0},
      {cx - 8 * s, cy - 10 * s, 5 * s, 2 * s, 2.5},
      {cx + 8 * s, cy - 10 * s, 5 * s, 2 * s, 2.5},
      {cx - 8 * s, cy - 5 * s, 3.5 * s, 2.2 * s, -3.0},
      {cx + 8 * s, cy - 5 * s, 3.5 * s, 2.2 * s, -3.0},
      {cx - 11 * s, cy + 5 * s, 5 * s, 5 * s, 3.0},
      {cx + 11 * s, cy + 5 * s, 5 * s, 5 * s, 3.0},
      {cx, cy + 12 * s, 6 * s, 2.5 * s, 1.5},
      {cx, cy + 19 * s, 6 * s, 3 * s, 3.0},
  };
  auto rng = seeded({subject_seed, 0xface});
  std::normal_distribution<double> normal(0.0, 1.0);
  FaceShape face;
  for (auto b : tmpl) {
    b.amplitude *= 1.0 + identity_variation * normal(rng);
    b.cx += 4.0 * identity_variation * s * normal(rng);
    b.cy += 4.0 * identity_variation * s * normal(rng);
    b.sx *= std::max(0.5, 1.0 + 0.5 * identity_variation * normal(rng));
    b.sy *= std::max(0.5, 1.0 + 0.5 * identity_variation * normal(rng));
    face.bumps.push_back(b);
  }
  // One free-form bump per subject.
  std::uniform_real_distribution<double> ux(0.25 * grid.width, 0.75 * grid.width);
  std::uniform_real_distribution<double> uy(0.25 * grid.height, 0.75 * grid.height);
  face.bumps.push_back({ux(rng), uy(rng), 4 * s, 4 * s, 7.5 * identity_variation * normal(rng)});
  for (auto& b : face.bumps) {
    b.amplitude *= 2.5 * grid.pixel_spacing;
  }
  return face;
}

RangeImage render_face(const FaceShape& face, const GridSpec& grid) {
  DepthGrid depth(grid.height, grid.width);
  for (int r = 0; r < grid.height; ++r)
    for (int c = 0; c < grid.width; ++c) depth(r, c) = face.height_at(c, r);
  return RangeImage(std::move(depth));
}

bool OcclusionSpec::covers(double col, double row) const {
  const double dx = (col - cx) / rx;
  const double dy = (row - cy) / ry;
  switch (kind) {
    case OcclusionKind::kEye:
    case OcclusionKind::kMouth:
      return dx * dx + dy * dy <= 1.0;
    case OcclusionKind::kGlasses: {
      // Two lenses at cx -/+ rx * 1.6 and a bridge between them.
      const double sep = 1.6 * rx;
      const double lx = (col - (cx - sep)) / rx;
      const double rx2 = (col - (cx + sep)) / rx;
      const bool lens = lx * lx + dy * dy <= 1.0 || rx2 * rx2 + dy * dy <= 1.0;
      const bool bridge = std::abs(col - cx) <= sep && std::abs(row - cy) <= 0.25 * ry;
      return lens || bridge;
    }
    case OcclusionKind::kHair:
      // Band from the top edge down to a wavy hairline at cy.
      return row <= cy + ry * std::sin(2.0 * std::numbers::pi * col / rx + phase);
    case OcclusionKind::kNone:
      return false;
  }
  return false;
}

double OcclusionSpec::offset(double col, double row) const {
  switch (kind) {
    case OcclusionKind::kEye:
    case OcclusionKind::kMouth:
      // Fingers: ridges across the hand.
      return height + 0.08 * height * std::sin(2.0 * std::numbers::pi * col / 4.0 + phase);
    case OcclusionKind::kGlasses:
      return height;
    case OcclusionKind::kHair:
      return height + 0.06 * height * std::sin(2.0 * std::numbers::pi * col / 3.0 + phase) *
                          std::sin(2.0 * std::numbers::pi * row / 5.0);
    case OcclusionKind::kNone:
      return 0.0;
  }
  return 0.0;
}

OcclusionSpec make_occlusion(OcclusionKind kind, const GridSpec& grid, double height, std::mt19937_64& rng) {
  const double s = unit_scale(grid);
  const double cx = (grid.width - 1) / 2.0;
  const double cy = (grid.height - 1) / 2.0;
  std::uniform_real_distribution<double> jitter(-1.5 * s, 1.5 * s);
  std::uniform_real_distribution<double> stretch(0.9, 1.1);
  std::uniform_real_distribution<double> lift(1.0, 1.2);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  OcclusionSpec o;
  o.kind = kind;
  o.phase = phase(rng);
  switch (kind) {
    case OcclusionKind::kEye:
      o.cx = cx - 8 * s;
      o.cy = cy - 8 * s;
      o.rx = 8 * s;
      o.ry = 7 * s;
      o.height = height * lift(rng);
      break;
    case OcclusionKind::kMouth:
      o.cx = cx;
      o.cy = cy + 13 * s;
      o.rx = 10 * s;
      o.ry = 6 * s;
      o.height = height * lift(rng);
      break;
    case OcclusionKind::kGlasses:
      o.cx = cx;
      o.cy = cy - 5 * s;
      o.rx = 5 * s;
      o.ry = 3.5 * s;
      o.height = 0.8 * height * lift(rng);
      break;
    case OcclusionKind::kHair:
      o.cx = cx;
      o.cy = cy - 13 * s;  // mean hairline row
      o.rx = 0.7 * grid.width;  // wavelength of the hairline
      o.ry = 3 * s;  // hairline amplitude
      o.height = 0.8 * height * lift(rng);
      break;
    case OcclusionKind::kNone:
      return o;
  }
  o.cx += jitter(rng);
  o.cy += jitter(rng);
  if (kind != OcclusionKind::kHair) {
    o.rx *= stretch(rng);
    o.ry *= stretch(rng);
  }
  o.height *= grid.pixel_spacing;
  return o;
}

OcclusionMask occlusion_footprint(const OcclusionSpec& spec, const GridSpec& grid) {
  BitGrid bits = BitGrid::Zero(grid.height, grid.width);
  for (int r = 0; r < grid.height; ++r)
    for (int c = 0; c < grid.width; ++c) bits(r, c) = spec.covers(c, r) ? 1 : 0;
  return OcclusionMask(std::move(bits));
}

RigidTransformd random_pose(const GridSpec& grid, double max_rotation_rad, double max_translation,
                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-max_rotation_rad, max_rotation_rad);
  std::uniform_real_distribution<double> shift(-max_translation, max_translation);
  const double ax = angle(rng), ay = angle(rng), az = angle(rng);
  const Eigen::Vector3d t(shift(rng), shift(rng), shift(rng));
  const Eigen::Vector3d center((grid.width - 1) / 2.0 * grid.pixel_spacing,
                               (grid.height - 1) / 2.0 * grid.pixel_spacing, 0.0);
  return RigidTransformd::Translation(center + t) * RigidTransformd::FromAngles(ax, ay, az) *
         RigidTransformd::Translation(-center);
}

namespace {

FaceShape subject_shape(const SyntheticParams& params, int subject_id, std::uint64_t seed) {
  return make_face_shape(params.grid, params.identity_variation,
                         seed * 1000003ULL + static_cast<std::uint64_t>(subject_id));
}

}  // namespace

RangeImage subject_face(const SyntheticParams& params, int subject_id, std::uint64_t seed) {
  return render_face(subject_shape(params, subject_id, seed), params.grid);
}

SyntheticScan synthesize_scan(const SyntheticParams& params, const ScanName& name, std::uint64_t seed) {
  const GridSpec& grid = params.grid;
  const FaceShape face = subject_shape(params, name.subject_id, seed);
  auto rng = seeded({seed, static_cast<std::uint64_t>(name.subject_id), static_cast<std::uint64_t>(name.kind),
                     static_cast<std::uint64_t>(name.index)});

  SyntheticScan scan{name, render_face(face, grid), RangeImage(grid.width, grid.height),
                     OcclusionMask(grid.width, grid.height), std::nullopt, RigidTransformd::Identity(), {}};
  if (name.kind != OcclusionKind::kNone) {
    scan.occlusion = make_occlusion(name.kind, grid, params.occlusion_height, rng);
    scan.truth_mask = occlusion_footprint(*scan.occlusion, grid);
  }

  std::normal_distribution<double> noise(0.0, params.noise_sigma > 0 ? params.noise_sigma : 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DepthGrid depth = scan.clean.depths();
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      double z = depth(r, c);
      if (scan.truth_mask.occluded(r, c)) z += scan.occlusion->offset(c, r);
      if (params.noise_sigma > 0) z += noise(rng);
      if (unit(rng) < params.spike_fraction) z += params.spike_height * (0.5 + 0.5 * unit(rng));
      depth(r, c) = z;
    }
  }
  scan.canonical = RangeImage(std::move(depth));

  if (name.kind != OcclusionKind::kNone) {
    scan.pose = random_pose(grid, params.max_rotation_deg * std::numbers::pi / 180.0, params.max_translation, rng);
  }
  scan.cloud = apply_transform(range_image_to_cloud(scan.canonical, grid.pixel_spacing), scan.pose);
  return scan;
}

std::vector<ScanName> dataset_layout(int n_subjects, int occlusions_per_subject) {
  constexpr OcclusionKind kCycle[] = {OcclusionKind::kEye, OcclusionKind::kMouth, OcclusionKind::kGlasses,
                                      OcclusionKind::kHair};
  std::vector<ScanName> names;
  for (int s = 0; s < n_subjects; ++s) {
    names.push_back({s, OcclusionKind::kNone, 0});
    for (int k = 0; k < occlusions_per_subject; ++k) names.push_back({s, kCycle[k % 4], k / 4});
  }
  return names;
}

std::vector<SyntheticScan> synthesize_dataset(const SyntheticParams& params, int n_subjects,
                                              int occlusions_per_subject, std::uint64_t seed) {
  if (n_subjects < 2) throw ValidationError("synthetic dataset needs at least 2 subjects");
  if (occlusions_per_subject < 0) throw ValidationError("occlusions_per_subject must be >= 0");
  std::vector<SyntheticScan> out;
  for (const auto& name : dataset_layout(n_subjects, occlusions_per_subject)) {
    out.push_back(synthesize_scan(params, name, seed));
  }
  return out;
}

json encode_mask_rle(const OcclusionMask& mask) {
  json runs = json::array();
  const auto& bits = mask.bits();
  Eigen::Index i = 0;
  while (i < bits.size()) {
    if (!bits.data()[i]) {
      ++i;
      continue;
    }
    Eigen::Index j = i;
    while (j < bits.size() && bits.data()[j]) ++j;
    runs.push_back({i, j - i});
    i = j;
  }
  return runs;
}

OcclusionMask decode_mask_rle(const json& runs, int width, int height) {
  BitGrid bits = BitGrid::Zero(height, width);
  for (const auto& run : runs) {
    const auto start = run.at(0).get<Eigen::Index>();
    const auto len = run.at(1).get<Eigen::Index>();
    if (start < 0 || len < 0 || start + len > bits.size()) throw ValidationError("mask run out of range");
    for (Eigen::Index k = start; k < start + len; ++k) bits.data()[k] = 1;
  }
  return OcclusionMask(std::move(bits));
}

json manifest_to_json(const Manifest& m) {
  json scans = json::array();
  for (const auto& e : m.scans) {
    json entry = {{"file", e.file},
                  {"subject_id", e.name.subject_id},
                  {"kind", to_string(e.name.kind)},
                  {"index", e.name.index},
                  {"pose", e.pose},
                  {"truth_mask_rle", encode_mask_rle(e.truth_mask)}};
    entry["occlusion"] = e.occlusion ? json(*e.occlusion) : json(nullptr);
    scans.push_back(std::move(entry));
  }
  return json{{"version", kManifestVersion},
              {"seed", m.seed},
              {"n_subjects", m.n_subjects},
              {"occlusions_per_subject", m.occlusions_per_subject},
              {"params", m.params},
              {"scans", scans}};
}

Manifest manifest_from_json(const json& j) {
  if (j.value("version", 0) != kManifestVersion) throw ValidationError("unsupported manifest version");
  Manifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.n_subjects = j.at("n_subjects").get<int>();
  m.occlusions_per_subject = j.at("occlusions_per_subject").get<int>();
  m.params = j.at("params").get<SyntheticParams>();
  for (const auto& e : j.at("scans")) {
    ManifestEntry entry;
    entry.file = e.at("file").get<std::string>();
    entry.name = {e.at("subject_id").get<int>(), parse_occlusion_kind(e.at("kind").get<std::string>()),
                  e.at("index").get<int>()};
    entry.pose = e.at("pose").get<RigidTransformd>();
    if (!e.at("occlusion").is_null()) entry.occlusion = e.at("occlusion").get<OcclusionSpec>();
    entry.truth_mask = decode_mask_rle(e.at("truth_mask_rle"), m.params.grid.width, m.params.grid.height);
    m.scans.push_back(std::move(entry));
  }
  return m;
}

Manifest load_manifest(const fs::path& path) {
  try {
    return manifest_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad manifest: ") + e.what(), 0);
  }
}

Manifest generate_synthetic_dataset(const SyntheticParams& params, int n_subjects, int occlusions_per_subject,
                                    std::uint64_t seed, const fs::path& out_dir) {
  const auto scans = synthesize_dataset(params, n_subjects, occlusions_per_subject, seed);
  fs::create_directories(out_dir);
  Manifest m;
  m.params = params;
  m.seed = seed;
  m.n_subjects = n_subjects;
  m.occlusions_per_subject = occlusions_per_subject;
  for (const auto& s : scans) {
    const std::string file = format_scan_name(s.name) + ".xyz";
    save_point_cloud(out_dir / file, s.cloud);
    m.scans.push_back({file, s.name, s.pose, s.occlusion, s.truth_mask});
  }
  write_file_atomic(out_dir / "manifest.json", manifest_to_json(m).dump(2) + "\n");
  return m;
}

}  // namespace occface
