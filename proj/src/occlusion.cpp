#include "occface/occlusion.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace occface {

DifferenceMap::DifferenceMap(DepthGrid values, FlagGrid valid) : values_(std::move(values)), valid_(std::move(valid)) {
  if (values_.rows() != valid_.rows() || values_.cols() != valid_.cols()) {
    throw ValidationError("difference map grids differ in size");
  }
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!valid_.data()[i]) {
      values_.data()[i] = 0.0;
    } else if (!std::isfinite(values_.data()[i]) || values_.data()[i] < 0.0) {
      throw ValidationError("difference map values must be finite and non-negative");
    }
  }
}

DifferenceMap difference_map(const RangeImage& candidate, const RangeImage& mean) {
  if (!candidate.same_shape(mean)) throw ValidationError("difference_map: image dimensions differ");
  FlagGrid valid = candidate.validity().array() && mean.validity().array();
  DepthGrid values = (candidate.depths() - mean.depths()).cwiseAbs();
  return DifferenceMap(std::move(values), std::move(valid));
}

void ThresholdConfig::validate() const {
  if (!(tolerance_fraction > 0.0 && tolerance_fraction <= 1.0)) {
    throw ValidationError("tolerance_fraction must lie in (0, 1]");
  }
  if (!(quantile > 0.0 && quantile <= 1.0)) throw ValidationError("quantile must lie in (0, 1]");
  if (!(column_floor_fraction >= 0.0 && column_floor_fraction <= 1.0)) {
    throw ValidationError("column_floor_fraction must lie in [0, 1]");
  }
}

double valid_quantile(const DifferenceMap& diff, double q) {
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(diff.valid_count()));
  for (Eigen::Index i = 0; i < diff.values().size(); ++i) {
    if (diff.validity().data()[i]) vals.push_back(diff.values().data()[i]);
  }
  if (vals.empty()) throw EmptyInputError("difference map has no valid pixels");
  std::sort(vals.begin(), vals.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(vals.size())));
  return vals[std::clamp<std::size_t>(rank, 1, vals.size()) - 1];
}

ThresholdProfile threshold_profile(const DifferenceMap& diff, const ThresholdConfig& cfg) {
  cfg.validate();
  if (diff.valid_count() == 0) throw EmptyInputError("difference map has no valid pixels");
  ThresholdProfile profile;
  profile.per_column_max.assign(static_cast<std::size_t>(diff.width()), 0.0);
  for (int r = 0; r < diff.height(); ++r) {
    for (int c = 0; c < diff.width(); ++c) {
      if (diff.valid(r, c)) {
        auto& m = profile.per_column_max[static_cast<std::size_t>(c)];
        m = std::max(m, diff.value(r, c));
      }
    }
  }
  profile.column_floor =
      cfg.column_floor_fraction * *std::max_element(profile.per_column_max.begin(), profile.per_column_max.end());
  if (cfg.mode == ThresholdMode::kGlobalQuantile) profile.global_threshold = valid_quantile(diff, cfg.quantile);
  return profile;
}

OcclusionMask find_threshold_mask(const DifferenceMap& diff, const ThresholdConfig& cfg) {
  const ThresholdProfile profile = threshold_profile(diff, cfg);
  BitGrid bits = BitGrid::Zero(diff.height(), diff.width());
  for (int r = 0; r < diff.height(); ++r) {
    for (int c = 0; c < diff.width(); ++c) {
      if (!diff.valid(r, c)) continue;
      const double v = diff.value(r, c);
      bool hit = false;
      if (cfg.mode == ThresholdMode::kPerColumn) {
        const double colmax = profile.per_column_max[static_cast<std::size_t>(c)];
        hit = colmax > 0.0 && colmax >= profile.column_floor && v >= cfg.tolerance_fraction * colmax;
      } else {
        hit = profile.global_threshold > 0.0 && v >= profile.global_threshold;
      }
      bits(r, c) = hit ? 1 : 0;
    }
  }
  return OcclusionMask(std::move(bits));
}

EdgeResult find_edges(const OcclusionMask& mask, const DifferenceMap& diff) {
  if (mask.width() != diff.width() || mask.height() != diff.height()) {
    throw ValidationError("find_edges: mask and difference map differ in size");
  }
  const int h = mask.height();
  const int w = mask.width();
  EdgeResult out;
  out.labels.setConstant(h, w, -1);
  out.boundary = BitGrid::Zero(h, w);

  constexpr int kDr[4] = {-1, 1, 0, 0};
  constexpr int kDc[4] = {0, 0, -1, 1};
  std::deque<std::pair<int, int>> queue;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (mask.occluded(r, c) || out.labels(r, c) >= 0) continue;
      const int label = out.component_count++;
      out.labels(r, c) = label;
      queue.emplace_back(r, c);
      while (!queue.empty()) {
        const auto [cr, cc] = queue.front();
        queue.pop_front();
        for (int k = 0; k < 4; ++k) {
          const int nr = cr + kDr[k];
          const int nc = cc + kDc[k];
          if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
          if (mask.occluded(nr, nc) || out.labels(nr, nc) >= 0) continue;
          out.labels(nr, nc) = label;
          queue.emplace_back(nr, nc);
        }
      }
    }
  }

  out.component_boundaries.resize(static_cast<std::size_t>(out.component_count));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (mask.occluded(r, c)) continue;
      bool edge = false;
      for (int k = 0; k < 4 && !edge; ++k) {
        const int nr = r + kDr[k];
        const int nc = c + kDc[k];
        edge = nr < 0 || nr >= h || nc < 0 || nc >= w || mask.occluded(nr, nc);
      }
      if (!edge) continue;
      const Eigen::Index idx = static_cast<Eigen::Index>(r) * w + c;
      out.boundary(r, c) = 1;
      out.indices.push_back(idx);
      out.values.push_back(diff.valid(r, c) ? diff.value(r, c) : 0.0);
      out.component_boundaries[static_cast<std::size_t>(out.labels(r, c))].push_back(idx);
    }
  }
  return out;
}

RangeImage apply_mask(const RangeImage& img, const OcclusionMask& mask) {
  if (!mask.matches(img)) throw ValidationError("apply_mask: mask and image differ in size");
  FlagGrid valid = img.validity().array() && (mask.bits().array() == 0);
  return RangeImage(img.depths(), std::move(valid));
}

}  // namespace occface
