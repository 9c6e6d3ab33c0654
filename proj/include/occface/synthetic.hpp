#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <json.hpp>

#include "occface/core.hpp"
#include "occface/dataset_io.hpp"
#include "occface/recognition.hpp"

namespace occface {

struct GridSpec {
  int width = 48;
  int height = 48;
  double pixel_spacing = 1.0;
};

/// Knobs of the synthetic face generator. Lengths are in pixel units scaled
/// by the grid's pixel spacing.
struct SyntheticParams {
  GridSpec grid;
  double identity_variation = 0.1;  ///< relative jitter of face bumps between subjects
  double noise_sigma = 0.05;        ///< Gaussian depth noise per scan
  double spike_fraction = 0.002;    ///< fraction of pixels hit by a noise spike
  double spike_height = 15.0;
  double occlusion_height = 30.0;   ///< depth offset of occluding objects
  double max_rotation_deg = 4.0;    ///< per-axis pose rotation bound for occluded scans
  double max_translation = 1.5;     ///< per-axis pose translation bound for occluded scans
};

/// Anisotropic Gaussian bump a * exp(-(dx^2 / 2sx^2 + dy^2 / 2sy^2)).
struct Bump {
  double cx = 0, cy = 0, sx = 1, sy = 1, amplitude = 0;
};

/// Smooth face-like height field over pixel coordinates.
struct FaceShape {
  std::vector<Bump> bumps;
  double height_at(double col, double row) const;
};

FaceShape make_face_shape(const GridSpec& grid, double identity_variation, std::uint64_t subject_seed);
/// Noise-free, fully valid rendering of a face in canonical pose.
RangeImage render_face(const FaceShape& face, const GridSpec& grid);

/// Occluding object placed in front of the face (toward the sensor).
struct OcclusionSpec {
  OcclusionKind kind = OcclusionKind::kNone;
  double cx = 0, cy = 0;  ///< footprint center (pixels)
  double rx = 0, ry = 0;  ///< footprint radii (pixels)
  double height = 0;      ///< depth offset above the face
  double phase = 0;       ///< texture / outline phase

  bool covers(double col, double row) const;
  /// Depth added on top of the face at a covered pixel.
  double offset(double col, double row) const;
};

OcclusionSpec make_occlusion(OcclusionKind kind, const GridSpec& grid, double height, std::mt19937_64& rng);
OcclusionMask occlusion_footprint(const OcclusionSpec& spec, const GridSpec& grid);

struct SyntheticScan {
  ScanName name;
  RangeImage clean;      ///< face only, canonical pose, noise-free
  RangeImage canonical;  ///< with occluder, noise and spikes, canonical pose
  OcclusionMask truth_mask;
  std::optional<OcclusionSpec> occlusion;
  RigidTransformd pose;  ///< canonical -> scan coordinates
  PointCloudd cloud;     ///< the scan as delivered (posed)
};

/// Noise-free canonical face of one subject, as rendered into every scan of
/// that subject.
RangeImage subject_face(const SyntheticParams& params, int subject_id, std::uint64_t seed);

/// Pure function of (params, name, dataset seed).
SyntheticScan synthesize_scan(const SyntheticParams& params, const ScanName& name, std::uint64_t seed);

/// Per subject: one neutral scan followed by `occlusions_per_subject`
/// occluded scans cycling eye, mouth, glasses, hair.
std::vector<ScanName> dataset_layout(int n_subjects, int occlusions_per_subject);
std::vector<SyntheticScan> synthesize_dataset(const SyntheticParams& params, int n_subjects,
                                              int occlusions_per_subject, std::uint64_t seed);

/// Pose with rotation about the grid center; rotation angles bounded by
/// `max_rotation_rad` per axis and translation by `max_translation` per axis.
RigidTransformd random_pose(const GridSpec& grid, double max_rotation_rad, double max_translation,
                            std::mt19937_64& rng);

// --- manifest ---

inline constexpr int kManifestVersion = 1;

struct ManifestEntry {
  std::string file;  ///< relative to the manifest directory
  ScanName name;
  RigidTransformd pose;
  std::optional<OcclusionSpec> occlusion;
  OcclusionMask truth_mask{1, 1};
};

struct Manifest {
  SyntheticParams params;
  std::uint64_t seed = 0;
  int n_subjects = 0;
  int occlusions_per_subject = 0;
  std::vector<ManifestEntry> scans;
};

nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j);
Manifest load_manifest(const fs::path& path);

/// Writes one "<scan name>.xyz" per scan plus "manifest.json" into `out_dir`.
Manifest generate_synthetic_dataset(const SyntheticParams& params, int n_subjects, int occlusions_per_subject,
                                    std::uint64_t seed, const fs::path& out_dir);

/// Run-length encoding of occluded pixels: [start, length] pairs over
/// row-major indices.
nlohmann::json encode_mask_rle(const OcclusionMask& mask);
OcclusionMask decode_mask_rle(const nlohmann::json& runs, int width, int height);

}  // namespace occface
