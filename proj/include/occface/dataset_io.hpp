#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "occface/core.hpp"
#include "occface/features.hpp"
#include "occface/recognition.hpp"
#include "occface/restoration.hpp"

namespace occface {

namespace fs = std::filesystem;

/// Writes `contents` to a temporary sibling file and renames it into place.
void write_file_atomic(const fs::path& path, const std::string& contents);
std::string read_file(const fs::path& path);

// --- point clouds: one "x y z" triple per line, '#' starts a comment line ---

PointCloudd parse_point_cloud(const std::string& text);
PointCloudd load_point_cloud(const fs::path& path);
/// Full round-trip precision (%.17g).
std::string format_point_cloud(const PointCloudd& cloud);
void save_point_cloud(const fs::path& path, const PointCloudd& cloud);

// --- range images: binary 16-bit PGM ("P5", maxval 65535, big-endian) plus a
// JSON sidecar "<file>.json" holding the depth mapping. Valid depths map to
// codes 0..65534 via code = round((depth - offset) / scale); 65535 marks an
// invalid pixel. ---

inline constexpr std::uint16_t kInvalidDepthCode = 65535;
inline constexpr std::uint16_t kMaxDepthCode = 65534;

struct DepthQuantization {
  double offset = 0.0;
  double scale = 1.0;

  /// offset = min valid depth, scale = (max - min) / 65534 (1 for flat or
  /// empty images).
  static DepthQuantization FitTo(const RangeImage& img);
  std::uint16_t encode(double depth) const;
  double decode(std::uint16_t code) const { return offset + scale * code; }
};

struct Gray16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;  ///< row-major
};

std::string encode_pgm16(const Gray16& img);
Gray16 decode_pgm16(const std::string& bytes);

void save_range_image(const fs::path& path, const RangeImage& img,
                      std::optional<DepthQuantization> quant = std::nullopt);
RangeImage load_range_image(const fs::path& path);
fs::path sidecar_path(const fs::path& pgm_path);

/// Masks are plain 16-bit PGMs: 0 clear, 65535 occluded (any nonzero code
/// loads as occluded).
void save_mask(const fs::path& path, const OcclusionMask& mask);
OcclusionMask load_mask(const fs::path& path);

/// 8-bit binary PPM with channels (n + 1) / 2 * 255.
void save_normal_map_ppm(const fs::path& path, const NormalMap& normals);

/// One value per line, %.17g.
void save_vector_text(const fs::path& path, const Eigen::VectorXd& v);
Eigen::VectorXd load_vector_text(const fs::path& path);

// --- PCA basis: little-endian binary ---
//   8 bytes  magic "OFPCABAS"
//   u32      version (1)
//   u32      width, height, components, training_samples
//   f64[P]   mean, f64[M] eigenvalues, f64[M][P] eigenvectors (one per row)

inline constexpr std::uint32_t kBasisFormatVersion = 1;
std::string encode_basis(const PcaBasis& basis);
PcaBasis decode_basis(const std::string& bytes);
void save_basis(const fs::path& path, const PcaBasis& basis);
PcaBasis load_basis(const fs::path& path);

// --- scan naming (Bosphorus-style): bs<subject>_<class>_<code>_<index> ---
// Neutral scans use class/code "N_N"; occluded scans "O_EYE", "O_MOUTH",
// "O_GLASSES", "O_HAIR".

struct ScanName {
  int subject_id = 0;
  OcclusionKind kind = OcclusionKind::kNone;
  int index = 0;
};

std::string format_scan_name(const ScanName& name);
/// Accepts a stem or a file name; throws ValidationError on mismatch.
ScanName parse_scan_name(const std::string& file_name);

/// Loads every "*.xyz"/"*.txt" scan in `dir` whose name follows the
/// convention, sorted by (subject, kind, index).
struct NamedScan {
  ScanName name;
  fs::path path;
};
std::vector<NamedScan> list_scans(const fs::path& dir);

}  // namespace occface
