#pragma once

#include <vector>

#include "occface/core.hpp"

namespace occface {

/// Square window of side 2 * radius + 1. A weight w repeats the sample w
/// times in the median pool; weights are stored row-major.
struct MedianFilterConfig {
  int window_radius = 1;
  std::vector<int> weights;  ///< empty means uniform weights of 1

  int window_side() const { return 2 * window_radius + 1; }
  static MedianFilterConfig Uniform(int radius);
  static MedianFilterConfig CenterOnly(int radius);
  /// Throws ValidationError when the config cannot be used.
  void validate() const;
  int weight(int dr, int dc) const;
};

struct MedianFilterResult {
  RangeImage image;
  /// Valid pixels whose pool was empty (all weighted neighbors invalid or
  /// zero-weight) and which were copied through.
  std::size_t passthrough_pixels = 0;
};

/// Weighted median over the valid neighbors of every valid pixel. Border
/// windows are truncated to the image; even-weight pools take the lower
/// median. Validity flags are copied unchanged.
MedianFilterResult weighted_median_filter(const RangeImage& img, const MedianFilterConfig& cfg);

}  // namespace occface
