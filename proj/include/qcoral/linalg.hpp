#pragma once

// Dense real linear algebra shared by every other module: data matrices,
// covariances, symmetric eigendecomposition and (pseudo-)inverse square roots.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qcoral/errors.hpp"

namespace qcoral {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default relative rank tolerance: eigenvalues above 1e-10 * lambda_max count.
inline constexpr double kDefaultRankTol = 1e-10;

/// D x n real data matrix, one sample per column.
struct DataMatrix {
  Matrix values;
  std::optional<std::vector<int>> labels;
  /// Euclidean norms of the columns before unit normalization.
  std::optional<Vector> column_norms;
  /// Feature dimension before zero padding (0 means "same as rows").
  Index original_dimension = 0;

  DataMatrix() = default;
  explicit DataMatrix(Matrix v, std::optional<std::vector<int>> l = std::nullopt)
      : values(std::move(v)), labels(std::move(l)) {}

  Index dimension() const { return values.rows(); }
  Index samples() const { return values.cols(); }
  Index unpadded_dimension() const {
    return original_dimension > 0 ? original_dimension : values.rows();
  }
  bool has_labels() const { return labels.has_value(); }

  /// Throws ValidationError when shape or finiteness invariants are broken.
  void validate() const {
    if (labels && static_cast<Index>(labels->size()) != samples()) {
      throw ValidationError("linalg", "label count " + std::to_string(labels->size()) +
                                          " does not match sample count " +
                                          std::to_string(samples()));
    }
    if (column_norms && column_norms->size() != samples()) {
      throw ValidationError("linalg", "column_norms length does not match sample count");
    }
    if (!values.allFinite()) throw ValidationError("linalg", "data matrix has non-finite entries");
  }
};

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
  Index rank = 0;

  Index dimension() const { return eigenvalues.size(); }
};

inline double frobenius_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("linalg", "frobenius_distance shape mismatch");
  }
  return (a - b).norm();
}

/// C = X X^T (samples as columns, no 1/n factor).
inline Matrix covariance(const DataMatrix& x) {
  if (x.values.size() == 0) throw DimensionError("linalg", "covariance of an empty matrix");
  Matrix c = Matrix::Zero(x.dimension(), x.dimension());
  c.selfadjointView<Eigen::Lower>().rankUpdate(x.values);
  return c.selfadjointView<Eigen::Lower>();
}

inline bool is_symmetric(const Matrix& c, double tol = 1e-10) {
  if (c.rows() != c.cols()) return false;
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  return (c - c.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// Count of eigenvalues strictly above `rank_tol * lambda_max`.
inline Index count_rank(const Vector& descending, double rank_tol) {
  if (descending.size() == 0 || descending(0) <= 0.0) return 0;
  const double threshold = rank_tol * descending(0);
  Index r = 0;
  while (r < descending.size() && descending(r) > threshold) ++r;
  return r;
}

/// Makes the first component of `v` with |v_i| > 1e-12 positive.
inline void canonicalize_sign(Eigen::Ref<Vector> v) {
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

inline SpectralDecomposition symmetric_eig(const Matrix& c, double rank_tol = kDefaultRankTol) {
  if (c.rows() != c.cols()) throw DimensionError("linalg", "symmetric_eig needs a square matrix");
  if (rank_tol < 0) throw ValidationError("linalg", "rank tolerance must be non-negative");
  if (!is_symmetric(c)) throw ValidationError("linalg", "symmetric_eig input is not symmetric");

  const Index d = c.rows();
  SpectralDecomposition out;
  if (d == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(c);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("linalg", "symmetric eigensolver failed to converge");
  }
  // Eigen returns ascending order; flip to descending.
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  for (Index j = 0; j < d; ++j) canonicalize_sign(out.eigenvectors.col(j));
  out.rank = count_rank(out.eigenvalues, rank_tol);
  return out;
}

/// Rebuilds a spectral decomposition from arbitrary (value, vector) pairs:
/// sorts descending, and recomputes the rank.
inline SpectralDecomposition make_spectral(const Vector& values, const Matrix& vectors,
                                           double rank_tol = kDefaultRankTol) {
  if (vectors.cols() != values.size()) {
    throw DimensionError("linalg", "eigenvalue / eigenvector count mismatch");
  }
  std::vector<Index> order(static_cast<std::size_t>(values.size()));
  for (Index i = 0; i < values.size(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values(a) > values(b); });
  SpectralDecomposition out;
  out.eigenvalues.resize(values.size());
  out.eigenvectors.resize(vectors.rows(), vectors.cols());
  for (Index k = 0; k < values.size(); ++k) {
    out.eigenvalues(k) = values(order[static_cast<std::size_t>(k)]);
    out.eigenvectors.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
    canonicalize_sign(out.eigenvectors.col(k));
  }
  out.rank = count_rank(out.eigenvalues, rank_tol);
  return out;
}

/// V diag(lambda^{sign/2}) V^T.
///
/// Tiny negative eigenvalues are clamped to zero. For sign = -1 the
/// Moore-Penrose convention applies: directions outside the first
/// `s.rank` eigenvalues get zero weight. `keep`, when given, additionally
/// truncates to the `keep` largest eigenvalues (used for the rank-r recolorer).
inline Matrix matrix_half_power(const SpectralDecomposition& s, int sign,
                                std::optional<Index> keep = std::nullopt) {
  if (sign != 1 && sign != -1) throw ValidationError("linalg", "sign must be +1 or -1");
  const Index d = s.dimension();
  const Index limit = std::min(d, keep.value_or(d));
  Vector weights = Vector::Zero(d);
  for (Index k = 0; k < limit; ++k) {
    const double lambda = std::max(0.0, s.eigenvalues(k));
    if (sign > 0) {
      weights(k) = std::sqrt(lambda);
    } else if (k < s.rank && lambda > 0.0) {
      weights(k) = 1.0 / std::sqrt(lambda);
    }
  }
  Matrix out = s.eigenvectors * weights.asDiagonal() * s.eigenvectors.transpose();
  return 0.5 * (out + out.transpose());
}

/// Orthogonal projector onto the span of the first `s.rank` eigenvectors.
inline Matrix range_projector(const SpectralDecomposition& s) {
  const auto v = s.eigenvectors.leftCols(s.rank);
  return v * v.transpose();
}

/// Next power of two >= n (n >= 1).
inline Index next_power_of_two(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(Index n) {
  int q = 0;
  while ((Index{1} << q) < n) ++q;
  return q;
}

}  // namespace qcoral
