#pragma once

// Principal component analysis of a q x n snapshot matrix (columns are
// samples). Components come from a thin SVD of the centered, transposed data
// scaled by 1/sqrt(n-1), so variances equal the eigenvalues of the
// Bessel-corrected covariance.

#include "aerosurrogate/common.hpp"

#include <optional>
#include <vector>

namespace aerosurrogate {

struct PcaBasis {
  /// Variances below this fraction of the largest one are numerically null.
  static constexpr double kNullTolerance = 1e-14;

  Vector mean;        // q
  Matrix components;  // q x r, orthonormal columns
  Vector variances;   // r, nonincreasing

  Index features() const { return mean.size(); }
  Index rank() const { return components.cols(); }

  std::vector<bool> null_components() const {
    std::vector<bool> flags(static_cast<std::size_t>(rank()), false);
    const double top = rank() > 0 ? variances(0) : 0.0;
    for (Index k = 0; k < rank(); ++k) {
      flags[static_cast<std::size_t>(k)] = !(variances(k) > kNullTolerance * top);
    }
    return flags;
  }
};

inline PcaBasis pca_fit(const Matrix& data, std::optional<Index> rank = std::nullopt) {
  const Index q = data.rows();
  const Index n = data.cols();
  require(n >= 2, "pca_fit: need at least 2 samples");
  require(q >= 1, "pca_fit: empty feature dimension");
  require(data.allFinite(), "pca_fit: non-finite input");
  const Index max_rank = std::min(q, n);
  const Index r = rank.value_or(max_rank);
  require(r >= 1 && r <= max_rank, "pca_fit: rank must lie in [1, min(q, n)]");

  PcaBasis basis;
  basis.mean = data.rowwise().mean();
  const Matrix centered_t =
      (data.colwise() - basis.mean).transpose() / std::sqrt(static_cast<double>(n - 1));
  Eigen::BDCSVD<Matrix> svd(centered_t, Eigen::ComputeThinV);

  basis.components = svd.matrixV().leftCols(r);
  basis.variances = svd.singularValues().head(r).array().square().matrix();
  for (Index k = 0; k < r; ++k) {
    if (basis.variances(k) < 0.0) basis.variances(k) = 0.0;
    // deterministic sign: largest-magnitude entry positive
    Index arg = 0;
    basis.components.col(k).cwiseAbs().maxCoeff(&arg);
    if (basis.components(arg, k) < 0.0) basis.components.col(k) *= -1.0;
  }
  return basis;
}

/// Principal coordinates V^T (x - mean), one column per sample.
inline Matrix pca_transform(const PcaBasis& basis, const Matrix& samples) {
  require(samples.rows() == basis.features(), "pca_transform: feature count mismatch");
  return basis.components.transpose() * (samples.colwise() - basis.mean);
}

inline Matrix pca_inverse(const PcaBasis& basis, const Matrix& coords) {
  require(coords.rows() == basis.rank(), "pca_inverse: coordinate dimension mismatch");
  return (basis.components * coords).colwise() + basis.mean;
}

}  // namespace aerosurrogate
