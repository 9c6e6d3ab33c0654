#pragma once

#include "occface/core.hpp"

namespace occface {

/// Unit surface normals on the image grid, oriented toward the sensor (nz >= 0).
struct NormalMap {
  Eigen::MatrixXd nx, ny, nz;  ///< height x width each
  FlagGrid valid;              ///< false where the source pixel was invalid

  int width() const { return static_cast<int>(nx.cols()); }
  int height() const { return static_cast<int>(nx.rows()); }
  Eigen::Vector3d normal(int row, int col) const { return {nx(row, col), ny(row, col), nz(row, col)}; }
};

/// Normal of the depth surface (x = col * spacing, y = row * spacing, z = depth)
/// from central differences (one-sided on the border):
///   n ~ (-dz/dx, -dz/dy, 1).
/// Invalid pixels, and pixels whose differences would need an invalid
/// neighbor on both sides, get (0, 0, 1) and are flagged invalid.
NormalMap surface_normals(const RangeImage& img, double pixel_spacing);

/// Concatenated (nx, ny, nz) sampled at rows and columns 0, f, 2f, ... in
/// row-major order; length 3 * ceil(h / f) * ceil(w / f).
Eigen::VectorXd feature_vector(const NormalMap& normals, int downsample_factor);

}  // namespace occface
