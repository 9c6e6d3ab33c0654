#include "occface/preprocess.hpp"

#include <algorithm>
#include <utility>

namespace occface {

MedianFilterConfig MedianFilterConfig::Uniform(int radius) {
  MedianFilterConfig cfg;
  cfg.window_radius = radius;
  const int side = cfg.window_side();
  cfg.weights.assign(static_cast<std::size_t>(side * side), 1);
  return cfg;
}

MedianFilterConfig MedianFilterConfig::CenterOnly(int radius) {
  MedianFilterConfig cfg;
  cfg.window_radius = radius;
  const int side = cfg.window_side();
  cfg.weights.assign(static_cast<std::size_t>(side * side), 0);
  cfg.weights[static_cast<std::size_t>(radius * side + radius)] = 1;
  return cfg;
}

void MedianFilterConfig::validate() const {
  if (window_radius < 1) throw ValidationError("median filter radius must be >= 1");
  if (weights.empty()) return;
  const auto side = static_cast<std::size_t>(window_side());
  if (weights.size() != side * side) {
    throw ValidationError("median filter weights must have (2r+1)^2 entries");
  }
  if (std::any_of(weights.begin(), weights.end(), [](int w) { return w < 0; })) {
    throw ValidationError("median filter weights must be non-negative");
  }
  if (std::none_of(weights.begin(), weights.end(), [](int w) { return w > 0; })) {
    throw ValidationError("median filter needs at least one positive weight");
  }
}

int MedianFilterConfig::weight(int dr, int dc) const {
  if (weights.empty()) return 1;
  const int side = window_side();
  return weights[static_cast<std::size_t>((dr + window_radius) * side + (dc + window_radius))];
}

MedianFilterResult weighted_median_filter(const RangeImage& img, const MedianFilterConfig& cfg) {
  cfg.validate();
  const int h = img.height();
  const int w = img.width();
  const int rad = cfg.window_radius;
  DepthGrid out = img.depths();
  std::size_t passthrough = 0;
  std::vector<std::pair<double, int>> pool;
  pool.reserve(static_cast<std::size_t>(cfg.window_side() * cfg.window_side()));

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!img.valid(r, c)) continue;
      pool.clear();
      long total = 0;
      for (int dr = -rad; dr <= rad; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= h) continue;
        for (int dc = -rad; dc <= rad; ++dc) {
          const int cc = c + dc;
          if (cc < 0 || cc >= w || !img.valid(rr, cc)) continue;
          const int wt = cfg.weight(dr, dc);
          if (wt == 0) continue;
          pool.emplace_back(img.depth(rr, cc), wt);
          total += wt;
        }
      }
      if (total == 0) {
        ++passthrough;
        continue;
      }
      std::sort(pool.begin(), pool.end());
      // Lower median: the ceil(total / 2)-th sample of the expanded pool.
      const long target = (total + 1) / 2;
      long seen = 0;
      for (const auto& [value, wt] : pool) {
        seen += wt;
        if (seen >= target) {
          out(r, c) = value;
          break;
        }
      }
    }
  }
  return {RangeImage(std::move(out), img.validity()), passthrough};
}

}  // namespace occface
