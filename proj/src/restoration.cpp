#include "occface/restoration.hpp"

#include <algorithm>
#include <cmath>

#include "occface/occlusion.hpp"

namespace occface {

namespace {

constexpr double kSignTolerance = 1e-9;

void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > kSignTolerance) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

/// Orthogonalizes column k against columns [0, k) twice (modified
/// Gram-Schmidt with re-orthogonalization); returns the remaining norm.
double orthogonalize(Eigen::MatrixXd& basis, Eigen::Index k) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < k; ++j) {
      basis.col(k) -= basis.col(j).dot(basis.col(k)) * basis.col(j);
    }
  }
  return basis.col(k).norm();
}

/// Full decomposition keeping every available direction.
PcaBasis full_pca(const std::vector<RangeImage>& faces) {
  if (faces.size() < 2) throw ValidationError("train_pca: need at least 2 faces");
  const int w = faces.front().width();
  const int h = faces.front().height();
  for (const auto& f : faces) {
    if (f.width() != w || f.height() != h) throw ValidationError("train_pca: faces differ in size");
    if (!f.fully_valid()) throw ValidationError("train_pca: training faces must be fully valid");
  }
  const auto n = static_cast<Eigen::Index>(faces.size());
  const Eigen::Index p = static_cast<Eigen::Index>(w) * h;

  Eigen::MatrixXd data(p, n);
  for (Eigen::Index i = 0; i < n; ++i) data.col(i) = faces[static_cast<std::size_t>(i)].flattened();
  const Eigen::VectorXd mean = data.rowwise().mean();
  data.colwise() -= mean;

  const Eigen::MatrixXd gram = data.transpose() * data;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw Error(ErrorCategory::kNumerical, "eigen", "Gram eigendecomposition failed");

  const Eigen::Index m = std::min(n - 1, p);
  const double top = std::max(eig.eigenvalues()(n - 1), 0.0);
  const double cutoff = std::max(top, 1.0) * 1e-12 * static_cast<double>(n);

  PcaBasis basis;
  basis.width = w;
  basis.height = h;
  basis.mean = mean;
  basis.training_samples = static_cast<int>(n);
  basis.eigenvectors.resize(p, m);
  basis.eigenvalues.resize(m);

  Eigen::Index next_unit = 0;  // canonical direction used to complete the basis
  for (Eigen::Index k = 0; k < m; ++k) {
    const double lambda = eig.eigenvalues()(n - 1 - k);  // descending
    if (lambda > cutoff) {
      basis.eigenvectors.col(k) = data * eig.eigenvectors().col(n - 1 - k) / std::sqrt(lambda);
      basis.eigenvalues(k) = lambda / static_cast<double>(n - 1);
    } else {
      basis.eigenvectors.col(k).setZero();
      basis.eigenvalues(k) = 0.0;
    }
    double norm = orthogonalize(basis.eigenvectors, k);
    // Zero-variance directions are completed with canonical vectors.
    while (norm < 0.5 && next_unit < p) {
      basis.eigenvectors.col(k) = Eigen::VectorXd::Unit(p, next_unit++);
      norm = orthogonalize(basis.eigenvectors, k);
    }
    basis.eigenvectors.col(k) /= norm;
    normalize_sign(basis.eigenvectors.col(k));
  }
  return basis;
}

PcaBasis truncate(PcaBasis basis, int components) {
  if (components < 1 || components > basis.components()) {
    throw ValidationError("train_pca: component count must lie in [1, N-1]");
  }
  basis.eigenvectors.conservativeResize(Eigen::NoChange, components);
  basis.eigenvalues.conservativeResize(components);
  return basis;
}

}  // namespace

void PcaBasis::validate() const {
  if (width < 1 || height < 1) throw ValidationError("pca basis: bad dimensions");
  const Eigen::Index p = static_cast<Eigen::Index>(width) * height;
  if (mean.size() != p || eigenvectors.rows() != p) throw ValidationError("pca basis: pixel count mismatch");
  if (eigenvectors.cols() < 1 || eigenvalues.size() != eigenvectors.cols()) {
    throw ValidationError("pca basis: component count mismatch");
  }
  if (training_samples > 0 && components() > training_samples - 1) {
    throw ValidationError("pca basis: more components than training samples - 1");
  }
  if (!mean.allFinite() || !eigenvectors.allFinite() || !eigenvalues.allFinite()) {
    throw ValidationError("pca basis: non-finite entries");
  }
  for (Eigen::Index i = 1; i < eigenvalues.size(); ++i) {
    if (eigenvalues(i) > eigenvalues(i - 1)) throw ValidationError("pca basis: eigenvalues not sorted");
  }
}

PcaBasis train_pca(const std::vector<RangeImage>& faces, int components) {
  if (faces.size() >= 2 && (components < 1 || components > static_cast<int>(faces.size()) - 1)) {
    throw ValidationError("train_pca: component count must lie in [1, N-1]");
  }
  return truncate(full_pca(faces), components);
}

int select_component_count(const Eigen::VectorXd& eigenvalues, double energy) {
  if (eigenvalues.size() == 0) throw EmptyInputError("select_component_count: no eigenvalues");
  if (!(energy > 0.0 && energy <= 1.0)) throw ValidationError("energy fraction must lie in (0, 1]");
  const double total = eigenvalues.cwiseMax(0.0).sum();
  if (!(total > 0.0)) return 1;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    acc += std::max(eigenvalues(i), 0.0);
    if (acc >= energy * total) return static_cast<int>(i + 1);
  }
  return static_cast<int>(eigenvalues.size());
}

PcaBasis train_pca_by_energy(const std::vector<RangeImage>& faces, double energy) {
  PcaBasis full = full_pca(faces);
  const int m = select_component_count(full.eigenvalues, energy);
  return truncate(std::move(full), m);
}

Eigen::VectorXd project(const PcaBasis& basis, const RangeImage& face) {
  if (face.width() != basis.width || face.height() != basis.height) {
    throw ValidationError("project: face and basis differ in size");
  }
  if (!face.fully_valid()) throw ValidationError("project: face must be fully valid");
  return basis.eigenvectors.transpose() * (face.flattened() - basis.mean);
}

GappyCoefficients gappy_fit(const RangeImage& incomplete, const PcaBasis& basis) {
  if (incomplete.width() != basis.width || incomplete.height() != basis.height) {
    throw ValidationError("gappy_fit: image and basis differ in size");
  }
  const Eigen::Index m = basis.components();
  const Eigen::Index observed = incomplete.valid_count();
  if (observed < m) {
    throw UnderdeterminedFitError("gappy_fit: " + std::to_string(observed) + " observed pixels for " +
                                  std::to_string(m) + " components");
  }

  Eigen::MatrixXd a(observed, m);
  Eigen::VectorXd b(observed);
  const Eigen::VectorXd y = incomplete.flattened();
  const bool* valid = incomplete.validity().data();
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < basis.pixel_count(); ++i) {
    if (!valid[i]) continue;
    a.row(row) = basis.eigenvectors.row(i);
    b(row) = y(i) - basis.mean(i);
    ++row;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < m) {
    const int missing = qr.colsPermutation().indices()(qr.rank());
    throw RankDeficientError("gappy_fit: observed pixels do not determine component " + std::to_string(missing),
                             missing);
  }
  GappyCoefficients out;
  out.beta = qr.solve(b);
  out.observed_count = observed;
  out.residual_on_observed = (a * out.beta - b).norm();
  return out;
}

RangeImage reconstruct(const PcaBasis& basis, const Eigen::VectorXd& beta) {
  if (beta.size() != basis.components()) throw ValidationError("reconstruct: coefficient count mismatch");
  return RangeImage::FromFlat(basis.mean + basis.eigenvectors * beta, basis.width, basis.height);
}

RestoredFace restore_face(const RangeImage& occluded, const OcclusionMask& mask, const PcaBasis& basis) {
  if (!mask.matches(occluded)) throw ValidationError("restore_face: mask and image differ in size");
  const RangeImage observed = apply_mask(occluded, mask);
  GappyCoefficients coeffs = gappy_fit(observed, basis);
  const RangeImage filled = reconstruct(basis, coeffs);

  DepthGrid depth = filled.depths();
  for (Eigen::Index i = 0; i < depth.size(); ++i) {
    if (observed.validity().data()[i]) depth.data()[i] = observed.depths().data()[i];
  }
  const double err = coeffs.residual_on_observed;
  return {RangeImage(std::move(depth)), std::move(coeffs), err};
}

double full_image_error(const RangeImage& restored, const RangeImage& truth) {
  if (!restored.same_shape(truth)) throw ValidationError("full_image_error: images differ in size");
  if (!restored.fully_valid() || !truth.fully_valid()) throw ValidationError("full_image_error: images must be fully valid");
  return (restored.depths() - truth.depths()).norm();
}

}  // namespace occface
