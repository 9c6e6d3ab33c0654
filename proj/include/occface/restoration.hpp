#pragma once

#include <vector>

#include "occface/core.hpp"

namespace occface {

/// Mean face plus ordered principal directions of a set of training faces.
struct PcaBasis {
  int width = 0;
  int height = 0;
  Eigen::VectorXd mean;          ///< row-major, width * height
  Eigen::MatrixXd eigenvectors;  ///< (width * height) x M, orthonormal columns
  Eigen::VectorXd eigenvalues;   ///< sample-covariance eigenvalues, non-increasing
  int training_samples = 0;

  int components() const { return static_cast<int>(eigenvectors.cols()); }
  Eigen::Index pixel_count() const { return mean.size(); }
  RangeImage mean_image() const { return RangeImage::FromFlat(mean, width, height); }
  /// Throws ValidationError if shapes or invariants are violated.
  void validate() const;
};

struct GappyCoefficients {
  Eigen::VectorXd beta;
  Eigen::Index observed_count = 0;
  double residual_on_observed = 0.0;  ///< sqrt of the minimized sum of squares
};

struct RestoredFace {
  RangeImage image;  ///< observed pixels kept, holes filled from the basis
  GappyCoefficients coefficients;
  double error = 0.0;  ///< ||y' - y|| over observed pixels
};

/// PCA of fully valid, equally sized faces keeping `components` directions
/// (1 <= components <= faces.size() - 1). Eigenvectors come from the
/// N x N Gram matrix of the centered samples; each is sign-normalized so its
/// first non-negligible entry is positive.
PcaBasis train_pca(const std::vector<RangeImage>& faces, int components);

/// Smallest component count whose eigenvalues hold at least `energy` of the
/// total, clamped to [1, eigenvalues.size()].
int select_component_count(const Eigen::VectorXd& eigenvalues, double energy);

/// Like train_pca with the component count chosen by select_component_count.
PcaBasis train_pca_by_energy(const std::vector<RangeImage>& faces, double energy);

/// Plain projection coefficients <x - mean, v_i> of a fully valid face.
Eigen::VectorXd project(const PcaBasis& basis, const RangeImage& face);

/// Least-squares coefficients fitted on the valid pixels of `incomplete` only.
/// Throws UnderdeterminedFitError when fewer than M pixels are observed and
/// RankDeficientError when the restricted basis loses rank.
GappyCoefficients gappy_fit(const RangeImage& incomplete, const PcaBasis& basis);

/// mean + sum_i beta_i v_i as a fully valid image.
RangeImage reconstruct(const PcaBasis& basis, const Eigen::VectorXd& beta);
inline RangeImage reconstruct(const PcaBasis& basis, const GappyCoefficients& coeffs) {
  return reconstruct(basis, coeffs.beta);
}

/// Masks `occluded`, fits the basis to what remains and fills every occluded
/// or invalid pixel from the reconstruction.
RestoredFace restore_face(const RangeImage& occluded, const OcclusionMask& mask, const PcaBasis& basis);

/// Euclidean norm of the pixelwise difference over all pixels (both images
/// must be fully valid and equally sized).
double full_image_error(const RangeImage& restored, const RangeImage& truth);

}  // namespace occface
