#pragma once

#include <vector>

#include "occface/core.hpp"

namespace occface {

/// |candidate - mean| at pixels valid in both images.
class DifferenceMap {
 public:
  DifferenceMap(DepthGrid values, FlagGrid valid);

  int width() const { return static_cast<int>(values_.cols()); }
  int height() const { return static_cast<int>(values_.rows()); }
  double value(int row, int col) const { return values_(row, col); }
  bool valid(int row, int col) const { return valid_(row, col); }
  const DepthGrid& values() const { return values_; }
  const FlagGrid& validity() const { return valid_; }
  Eigen::Index valid_count() const { return valid_.count(); }

 private:
  DepthGrid values_;
  FlagGrid valid_;
};

DifferenceMap difference_map(const RangeImage& candidate, const RangeImage& mean);

enum class ThresholdMode { kPerColumn, kGlobalQuantile };

struct ThresholdConfig {
  ThresholdMode mode = ThresholdMode::kPerColumn;
  /// Per-column mode marks values >= tolerance_fraction * column maximum.
  /// At 1.0 only the exact column maxima are marked.
  double tolerance_fraction = 0.85;
  /// Per-column mode skips columns whose maximum is below this fraction of
  /// the largest column maximum. 0 keeps every column, as the literal rule does.
  double column_floor_fraction = 0.5;
  /// Global mode marks values >= this quantile of all valid values.
  double quantile = 0.9;

  void validate() const;
};

/// Column-wise sampling of a difference map.
struct ThresholdProfile {
  std::vector<double> per_column_max;  ///< 0 for columns without valid pixels
  double global_threshold = 0.0;       ///< quantile value (global mode only)
  double column_floor = 0.0;           ///< columns with a smaller maximum mark nothing
};

ThresholdProfile threshold_profile(const DifferenceMap& diff, const ThresholdConfig& cfg);

/// Nearest-rank quantile of the valid values: sorted[ceil(q * n) - 1].
double valid_quantile(const DifferenceMap& diff, double q);

/// Preliminary occlusion mask. Invalid pixels and zero-valued thresholds never
/// produce marks. Throws EmptyInputError when `diff` has no valid pixel.
OcclusionMask find_threshold_mask(const DifferenceMap& diff, const ThresholdConfig& cfg);

/// Connected components (4-neighborhood) of the non-occluded region and their
/// boundary pixels: non-occluded pixels with an occluded or out-of-bounds
/// 4-neighbor.
struct EdgeResult {
  int component_count = 0;
  /// Per-pixel component label, -1 on occluded pixels. Labels are assigned in
  /// row-major order of each component's first pixel.
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> labels;
  BitGrid boundary;                          ///< 1 on boundary pixels
  std::vector<Eigen::Index> indices;         ///< row-major linear indices of boundary pixels, ascending
  std::vector<double> values;                ///< difference value at each index (0 where invalid)
  std::vector<std::vector<Eigen::Index>> component_boundaries;
};

EdgeResult find_edges(const OcclusionMask& mask, const DifferenceMap& diff);

/// Occluded pixels become invalid; all other pixels are copied.
RangeImage apply_mask(const RangeImage& img, const OcclusionMask& mask);

}  // namespace occface
