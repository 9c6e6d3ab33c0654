#include "occface/features.hpp"

#include <cmath>

namespace occface {

namespace {

/// Derivative of depth along one grid axis at (r, c); nullopt when no valid
/// neighbor pair exists.
std::optional<double> slope(const RangeImage& img, int r, int c, int dr, int dc, double spacing) {
  const int h = img.height();
  const int w = img.width();
  auto ok = [&](int rr, int cc) { return rr >= 0 && rr < h && cc >= 0 && cc < w && img.valid(rr, cc); };
  const bool fwd = ok(r + dr, c + dc);
  const bool back = ok(r - dr, c - dc);
  if (fwd && back) return (img.depth(r + dr, c + dc) - img.depth(r - dr, c - dc)) / (2.0 * spacing);
  if (fwd) return (img.depth(r + dr, c + dc) - img.depth(r, c)) / spacing;
  if (back) return (img.depth(r, c) - img.depth(r - dr, c - dc)) / spacing;
  return std::nullopt;
}

}  // namespace

NormalMap surface_normals(const RangeImage& img, double pixel_spacing) {
  if (!(pixel_spacing > 0.0)) throw ValidationError("surface_normals: pixel spacing must be positive");
  const int h = img.height();
  const int w = img.width();
  NormalMap out;
  out.nx = Eigen::MatrixXd::Zero(h, w);
  out.ny = Eigen::MatrixXd::Zero(h, w);
  out.nz = Eigen::MatrixXd::Ones(h, w);
  out.valid = FlagGrid::Constant(h, w, false);

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!img.valid(r, c)) continue;
      const auto gx = slope(img, r, c, 0, 1, pixel_spacing);
      const auto gy = slope(img, r, c, 1, 0, pixel_spacing);
      // A 1-pixel-wide image has no neighbor on one axis; treat that slope as flat.
      const bool gx_ok = gx.has_value() || w == 1;
      const bool gy_ok = gy.has_value() || h == 1;
      if (!gx_ok || !gy_ok) continue;
      // Cross product of the tangents (1, 0, gx) x (0, 1, gy) = (-gx, -gy, 1).
      const Eigen::Vector3d n(-gx.value_or(0.0), -gy.value_or(0.0), 1.0);
      const double len = n.norm();
      if (!(len > 0.0) || !std::isfinite(len)) continue;
      out.nx(r, c) = n.x() / len;
      out.ny(r, c) = n.y() / len;
      out.nz(r, c) = n.z() / len;
      out.valid(r, c) = true;
    }
  }
  return out;
}

Eigen::VectorXd feature_vector(const NormalMap& normals, int downsample_factor) {
  if (downsample_factor < 1) throw ValidationError("feature_vector: downsample factor must be >= 1");
  const int f = downsample_factor;
  const int rows = (normals.height() + f - 1) / f;
  const int cols = (normals.width() + f - 1) / f;
  Eigen::VectorXd out(3 * rows * cols);
  Eigen::Index k = 0;
  for (int r = 0; r < normals.height(); r += f) {
    for (int c = 0; c < normals.width(); c += f) {
      out(k++) = normals.nx(r, c);
      out(k++) = normals.ny(r, c);
      out(k++) = normals.nz(r, c);
    }
  }
  return out;
}

}  // namespace occface
