#include "occface/core.hpp"

#include <vector>

namespace occface {

namespace {

void require_positive_dims(Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1) throw ValidationError("grid dimensions must be positive");
}

}  // namespace

RangeImage::RangeImage(int width, int height) {
  require_positive_dims(height, width);
  depth_ = DepthGrid::Zero(height, width);
  valid_ = FlagGrid::Constant(height, width, false);
}

RangeImage::RangeImage(DepthGrid depth)
    : RangeImage(std::move(depth), FlagGrid()) {}

RangeImage::RangeImage(DepthGrid depth, FlagGrid valid) : depth_(std::move(depth)), valid_(std::move(valid)) {
  require_positive_dims(depth_.rows(), depth_.cols());
  if (valid_.size() == 0) valid_ = FlagGrid::Constant(depth_.rows(), depth_.cols(), true);
  if (valid_.rows() != depth_.rows() || valid_.cols() != depth_.cols()) {
    throw ValidationError("depth and validity grids differ in size");
  }
  for (Eigen::Index r = 0; r < depth_.rows(); ++r) {
    for (Eigen::Index c = 0; c < depth_.cols(); ++c) {
      if (!valid_(r, c)) {
        depth_(r, c) = 0.0;
      } else if (!std::isfinite(depth_(r, c))) {
        throw ValidationError("non-finite depth at valid pixel (" + std::to_string(r) + ", " + std::to_string(c) + ")");
      }
    }
  }
}

Eigen::VectorXd RangeImage::flattened() const {
  return Eigen::Map<const Eigen::VectorXd>(depth_.data(), depth_.size());
}

RangeImage RangeImage::FromFlat(const Eigen::VectorXd& values, int width, int height) {
  require_positive_dims(height, width);
  if (values.size() != static_cast<Eigen::Index>(width) * height) {
    throw ValidationError("flat vector length does not match grid size");
  }
  return RangeImage(DepthGrid(Eigen::Map<const DepthGrid>(values.data(), height, width)));
}

OcclusionMask::OcclusionMask(int width, int height) {
  require_positive_dims(height, width);
  bits_ = BitGrid::Zero(height, width);
}

OcclusionMask::OcclusionMask(BitGrid bits) : bits_(std::move(bits)) {
  require_positive_dims(bits_.rows(), bits_.cols());
  bits_ = (bits_.array() != 0).cast<std::uint8_t>().matrix();
}

PointCloudd range_image_to_cloud(const RangeImage& img, double pixel_spacing) {
  if (!(pixel_spacing > 0.0)) throw ValidationError("pixel spacing must be positive");
  const Eigen::Index n = img.valid_count();
  if (n == 0) throw EmptyInputError("range image has no valid pixels");
  PointCloudd::Matrix pts(3, n);
  Eigen::Index k = 0;
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      if (!img.valid(r, c)) continue;
      pts.col(k++) << c * pixel_spacing, r * pixel_spacing, img.depth(r, c);
    }
  }
  return PointCloudd(std::move(pts));
}

PointCloudd upsampled_cloud(const RangeImage& img, double pixel_spacing, int factor) {
  if (factor < 1) throw ValidationError("upsampling factor must be >= 1");
  if (factor == 1) return range_image_to_cloud(img, pixel_spacing);
  if (!(pixel_spacing > 0.0)) throw ValidationError("pixel spacing must be positive");
  const int w = img.width();
  const int h = img.height();
  const int big_w = (w - 1) * factor + 1;
  const int big_h = (h - 1) * factor + 1;
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(static_cast<std::size_t>(big_w) * big_h);
  for (int rr = 0; rr < big_h; ++rr) {
    for (int cc = 0; cc < big_w; ++cc) {
      // Samples on a cell edge belong to the cell above or to the left.
      const int r0 = std::min(rr / factor, h - 2 < 0 ? 0 : h - 2);
      const int c0 = std::min(cc / factor, w - 2 < 0 ? 0 : w - 2);
      const double fy = static_cast<double>(rr) / factor - r0;
      const double fx = static_cast<double>(cc) / factor - c0;
      const int r1 = std::min(r0 + 1, h - 1);
      const int c1 = std::min(c0 + 1, w - 1);
      if (!img.valid(r0, c0) || !img.valid(r0, c1) || !img.valid(r1, c0) || !img.valid(r1, c1)) continue;
      const double z = (1 - fx) * (1 - fy) * img.depth(r0, c0) + fx * (1 - fy) * img.depth(r0, c1) +
                       (1 - fx) * fy * img.depth(r1, c0) + fx * fy * img.depth(r1, c1);
      pts.emplace_back(static_cast<double>(cc) / factor * pixel_spacing,
                       static_cast<double>(rr) / factor * pixel_spacing, z);
    }
  }
  if (pts.empty()) throw EmptyInputError("range image has no complete cell to resample");
  PointCloudd::Matrix out(3, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = pts[i];
  return PointCloudd(std::move(out));
}

CloudProjection cloud_to_range_image(const PointCloudd& cloud, int width, int height, double pixel_spacing) {
  if (!(pixel_spacing > 0.0)) throw ValidationError("pixel spacing must be positive");
  require_positive_dims(height, width);
  DepthGrid depth = DepthGrid::Zero(height, width);
  FlagGrid valid = FlagGrid::Constant(height, width, false);
  std::size_t dropped = 0;
  const auto& pts = cloud.points();
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const double cx = std::round(pts(0, i) / pixel_spacing);
    const double ry = std::round(pts(1, i) / pixel_spacing);
    const double z = pts(2, i);
    if (!std::isfinite(cx) || !std::isfinite(ry) || !std::isfinite(z) || cx < 0 || ry < 0 || cx >= width ||
        ry >= height) {
      ++dropped;
      continue;
    }
    const auto r = static_cast<Eigen::Index>(ry);
    const auto c = static_cast<Eigen::Index>(cx);
    if (!valid(r, c) || z > depth(r, c)) {
      depth(r, c) = z;
      valid(r, c) = true;
    }
  }
  return {RangeImage(std::move(depth), std::move(valid)), dropped};
}

double mask_iou(const OcclusionMask& a, const OcclusionMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw ValidationError("mask_iou: dimension mismatch");
  const auto pa = a.bits().array() != 0;
  const auto pb = b.bits().array() != 0;
  const auto inter = (pa && pb).count();
  const auto uni = (pa || pb).count();
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace occface
