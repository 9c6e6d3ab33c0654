#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "occface/error.hpp"

namespace occface {

// Grids are indexed (row, col); row 0 is the top scan line. Flattening to a
// vector is always row-major: linear index = row * width + col.
using DepthGrid = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FlagGrid = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BitGrid = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Rotation R = Rx(ax) * Ry(ay) * Rz(az) followed by a translation:
///   T(p) = Rx * Ry * Rz * p + t.
/// The same order is used for construction from angles and for angle
/// extraction.
template <typename Scalar>
class RigidTransform {
 public:
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;

  static constexpr Scalar kOrthonormalTolerance =
      std::max(Scalar(1e-9), Scalar(100) * std::numeric_limits<Scalar>::epsilon());

  RigidTransform() : rotation_(Matrix3::Identity()), translation_(Vector3::Zero()) {}

  /// Throws ValidationError unless `rotation` is orthonormal with det +1.
  RigidTransform(const Matrix3& rotation, const Vector3& translation)
      : rotation_(rotation), translation_(translation) {
    if (!rotation_.allFinite() || !translation_.allFinite()) {
      throw ValidationError("rigid transform has non-finite entries");
    }
    const Scalar ortho_err = (rotation_.transpose() * rotation_ - Matrix3::Identity()).cwiseAbs().maxCoeff();
    const Scalar det_err = std::abs(rotation_.determinant() - Scalar(1));
    if (ortho_err > kOrthonormalTolerance || det_err > kOrthonormalTolerance) {
      throw ValidationError("rotation matrix is not a proper rotation");
    }
  }

  static RigidTransform Identity() { return RigidTransform(); }

  static RigidTransform FromAngles(Scalar ax, Scalar ay, Scalar az,
                                   const Vector3& translation = Vector3::Zero()) {
    using Axis = Eigen::AngleAxis<Scalar>;
    Matrix3 r = (Axis(ax, Vector3::UnitX()) * Axis(ay, Vector3::UnitY()) * Axis(az, Vector3::UnitZ()))
                    .toRotationMatrix();
    return RigidTransform(r, translation, Unchecked{});
  }

  static RigidTransform Translation(const Vector3& t) { return RigidTransform(Matrix3::Identity(), t, Unchecked{}); }

  const Matrix3& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }

  /// (ax, ay, az) such that rotation() == Rx(ax) * Ry(ay) * Rz(az).
  Vector3 angles() const {
    const Scalar sy = std::clamp(rotation_(0, 2), Scalar(-1), Scalar(1));
    return Vector3(std::atan2(-rotation_(1, 2), rotation_(2, 2)), std::asin(sy),
                   std::atan2(-rotation_(0, 1), rotation_(0, 0)));
  }

  /// Magnitude of the rotation, in radians.
  Scalar rotation_angle() const {
    const Scalar c = std::clamp((rotation_.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
    return std::acos(c);
  }

  Matrix4 matrix() const {
    Matrix4 m = Matrix4::Identity();
    m.template topLeftCorner<3, 3>() = rotation_;
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  Vector3 operator()(const Vector3& p) const { return rotation_ * p + translation_; }

  /// Composition: (a * b)(p) == a(b(p)).
  RigidTransform operator*(const RigidTransform& rhs) const {
    return RigidTransform(rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_, Unchecked{});
  }

  RigidTransform inverse() const {
    Matrix3 rt = rotation_.transpose();
    return RigidTransform(rt, -(rt * translation_), Unchecked{});
  }

  /// The source was validated at its own precision, so the result is not
  /// re-checked against the (possibly tighter) target tolerance.
  template <typename Other>
  RigidTransform<Other> cast() const {
    return RigidTransform<Other>(rotation_.template cast<Other>(), translation_.template cast<Other>(),
                                 typename RigidTransform<Other>::Unchecked{});
  }

 private:
  template <typename>
  friend class RigidTransform;

  struct Unchecked {};
  RigidTransform(const Matrix3& r, const Vector3& t, Unchecked) : rotation_(r), translation_(t) {}

  Matrix3 rotation_;
  Vector3 translation_;
};

/// Unordered set of 3D points stored column-wise (3 x N).
template <typename Scalar>
class PointCloud {
 public:
  using Matrix = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  PointCloud() = default;
  explicit PointCloud(Matrix points) : points_(std::move(points)) {}

  Eigen::Index size() const { return points_.cols(); }
  bool empty() const { return points_.cols() == 0; }
  const Matrix& points() const { return points_; }
  Vector3 point(Eigen::Index i) const { return points_.col(i); }

  Vector3 centroid() const {
    if (empty()) throw EmptyInputError("centroid of an empty point cloud");
    return points_.rowwise().mean();
  }

  /// Index of the first point with a NaN/Inf coordinate, if any.
  std::optional<Eigen::Index> find_non_finite() const {
    for (Eigen::Index i = 0; i < points_.cols(); ++i) {
      if (!points_.col(i).allFinite()) return i;
    }
    return std::nullopt;
  }

 private:
  Matrix points_;
};

using RigidTransformd = RigidTransform<double>;
using PointCloudd = PointCloud<double>;

/// Throws ValidationError naming the first non-finite point.
template <typename Scalar>
void require_finite(const PointCloud<Scalar>& cloud, const char* what = "point cloud") {
  if (auto bad = cloud.find_non_finite()) {
    throw ValidationError(std::string(what) + ": point " + std::to_string(*bad) + " has a non-finite coordinate");
  }
}

template <typename Scalar>
PointCloud<Scalar> apply_transform(const PointCloud<Scalar>& cloud, const RigidTransform<Scalar>& t) {
  if (cloud.empty()) throw EmptyInputError("apply_transform: empty point cloud");
  require_finite(cloud);
  typename PointCloud<Scalar>::Matrix out = t.rotation() * cloud.points();
  out.colwise() += t.translation();
  return PointCloud<Scalar>(std::move(out));
}

/// Depth samples on a regular grid with an explicit validity flag per pixel.
/// Invalid pixels are excluded from every statistic; their stored depth is 0.
class RangeImage {
 public:
  /// All-invalid image.
  RangeImage(int width, int height);
  /// Fully valid image.
  explicit RangeImage(DepthGrid depth);
  RangeImage(DepthGrid depth, FlagGrid valid);

  int width() const { return static_cast<int>(depth_.cols()); }
  int height() const { return static_cast<int>(depth_.rows()); }
  Eigen::Index pixel_count() const { return depth_.size(); }

  double depth(int row, int col) const { return depth_(row, col); }
  bool valid(int row, int col) const { return valid_(row, col); }
  const DepthGrid& depths() const { return depth_; }
  const FlagGrid& validity() const { return valid_; }

  Eigen::Index valid_count() const { return valid_.count(); }
  bool fully_valid() const { return valid_count() == pixel_count(); }
  bool same_shape(const RangeImage& other) const {
    return width() == other.width() && height() == other.height();
  }

  /// Row-major depth vector (length width * height).
  Eigen::VectorXd flattened() const;
  static RangeImage FromFlat(const Eigen::VectorXd& values, int width, int height);

 private:
  DepthGrid depth_;
  FlagGrid valid_;
};

/// Binary per-pixel annotation; 1 = occluded.
class OcclusionMask {
 public:
  OcclusionMask(int width, int height);
  explicit OcclusionMask(BitGrid bits);

  int width() const { return static_cast<int>(bits_.cols()); }
  int height() const { return static_cast<int>(bits_.rows()); }
  bool occluded(int row, int col) const { return bits_(row, col) != 0; }
  const BitGrid& bits() const { return bits_; }
  Eigen::Index occluded_count() const { return (bits_.array() != 0).count(); }
  bool matches(const RangeImage& img) const { return width() == img.width() && height() == img.height(); }

 private:
  BitGrid bits_;
};

PointCloudd range_image_to_cloud(const RangeImage& img, double pixel_spacing);

/// Bilinear resampling of the surface at `factor` points per pixel step.
/// Samples are taken only inside grid cells whose four corners are valid;
/// factor 1 yields the valid pixels themselves.
PointCloudd upsampled_cloud(const RangeImage& img, double pixel_spacing, int factor);

struct CloudProjection {
  RangeImage image;
  std::size_t dropped = 0;  ///< points outside the grid
};

/// Each point is binned into its nearest cell (col = round(x / spacing),
/// row = round(y / spacing)). A cell hit by several points keeps the largest
/// depth; cells without points are invalid.
CloudProjection cloud_to_range_image(const PointCloudd& cloud, int width, int height, double pixel_spacing);

/// Intersection-over-union of the occluded sets of two masks.
double mask_iou(const OcclusionMask& a, const OcclusionMask& b);

}  // namespace occface
