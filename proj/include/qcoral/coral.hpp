#pragma once

// Classical correlation alignment: preprocessing, whitening with the source
// covariance and recoloring with the target covariance.

#include <cmath>

#include "qcoral/linalg.hpp"

namespace qcoral {

namespace detail {

/// Point y minimizing sum_i ||x_i - y|| (Weiszfeld iterations, then Newton
/// polishing). At the optimum the unit vectors (x_i - y)/||x_i - y|| sum to
/// zero, so centering at y and then scaling each column to unit norm leaves a
/// dataset that is exactly zero-mean.
inline Vector geometric_median(const Matrix& x, double tol = 1e-15, int max_iter = 5000) {
  const Index d = x.rows();
  const Index n = x.cols();
  Vector y = x.rowwise().mean();
  auto residual = [&](const Vector& c, Vector& dir_sum) {
    dir_sum.setZero(d);
    for (Index i = 0; i < n; ++i) {
      const Vector diff = x.col(i) - c;
      const double dist = diff.norm();
      if (dist > 1e-300) dir_sum += diff / dist;
    }
    return dir_sum.norm() / static_cast<double>(n);
  };

  Vector dir_sum(d);
  for (int it = 0; it < max_iter; ++it) {
    Vector num = Vector::Zero(d);
    double den = 0.0;
    bool on_point = false;
    for (Index i = 0; i < n; ++i) {
      const double dist = (x.col(i) - y).norm();
      if (dist < 1e-14) {
        on_point = true;
        continue;
      }
      num += x.col(i) / dist;
      den += 1.0 / dist;
    }
    if (den == 0.0) return y;  // every point coincides with y
    const Vector next = num / den;
    const double step = (next - y).norm();
    y = next;
    if (on_point || step <= 1e-9 * (1.0 + y.norm())) break;
  }

  // Newton on f(y) = sum ||x_i - y||; the Hessian may be singular along
  // directions where all points agree, hence the rank-revealing solve.
  for (int it = 0; it < 50; ++it) {
    if (residual(y, dir_sum) <= tol) break;
    Matrix hess = Matrix::Zero(d, d);
    for (Index i = 0; i < n; ++i) {
      const Vector diff = x.col(i) - y;
      const double dist = diff.norm();
      if (dist < 1e-14) continue;
      const Vector u = diff / dist;
      hess += (Matrix::Identity(d, d) - u * u.transpose()) / dist;
    }
    const Vector step = hess.completeOrthogonalDecomposition().solve(dir_sum);
    if (!step.allFinite()) break;
    // Damped step: halve until the residual does not grow.
    const double before = residual(y, dir_sum);
    double scale = 1.0;
    Vector scratch(d);
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      const Vector trial = y + scale * step;
      if (residual(trial, scratch) <= before) {
        y = trial;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;
  }
  return y;
}

}  // namespace detail

/// Zero-centers the samples and scales every column to unit Euclidean norm.
///
/// Centering uses the geometric median, for which the normalized columns have
/// zero feature-wise mean. Zero columns stay zero with norm 0 recorded.
inline DataMatrix preprocess(const DataMatrix& x) {
  x.validate();
  if (x.samples() < 2) {
    throw DataError("coral", "insufficient data: preprocess needs at least 2 samples, got " +
                                 std::to_string(x.samples()));
  }
  DataMatrix out = x;
  const Vector center = detail::geometric_median(x.values);
  out.values = x.values.colwise() - center;
  Vector norms(x.samples());
  for (Index i = 0; i < x.samples(); ++i) {
    const double nrm = out.values.col(i).norm();
    // Columns that coincide with the center (up to rounding) are zero.
    if (nrm <= 1e-12 * (1.0 + x.values.col(i).norm())) {
      norms(i) = 0.0;
      out.values.col(i).setZero();
    } else {
      norms(i) = nrm;
      out.values.col(i) /= nrm;
    }
  }
  out.column_norms = std::move(norms);
  return out;
}

/// Whitening / recoloring pair for one (source, target) domain pair.
struct CoralTransform {
  Matrix whitener;   // C_s^{-1/2}, pseudo-inverse square root
  Matrix recolorer;  // C_t^{1/2} truncated to the r largest eigenvalues
  Matrix combined;   // A* = whitener * recolorer; data maps as A*^T x
  Index rank_used = 0;

  Index dimension() const { return whitener.rows(); }
};

inline CoralTransform fit_coral(const DataMatrix& xs, const DataMatrix& xt,
                                double rank_tol = kDefaultRankTol) {
  xs.validate();
  xt.validate();
  if (xs.dimension() != xt.dimension()) {
    throw DimensionError("coral", "source dimension " + std::to_string(xs.dimension()) +
                                      " != target dimension " + std::to_string(xt.dimension()));
  }
  const SpectralDecomposition src = symmetric_eig(covariance(xs), rank_tol);
  const SpectralDecomposition tgt = symmetric_eig(covariance(xt), rank_tol);
  CoralTransform t;
  t.rank_used = std::min(src.rank, tgt.rank);
  t.whitener = matrix_half_power(src, -1);
  t.recolorer = matrix_half_power(tgt, +1, t.rank_used);
  t.combined = t.whitener * t.recolorer;
  return t;
}

/// X_hat = C_t^{1/2} (C_s^{-1/2} X_s), labels carried over.
inline DataMatrix apply_coral(const CoralTransform& t, const DataMatrix& xs) {
  xs.validate();
  if (t.dimension() != xs.dimension()) {
    throw DimensionError("coral", "transform dimension " + std::to_string(t.dimension()) +
                                      " != data dimension " + std::to_string(xs.dimension()));
  }
  DataMatrix out;
  out.values = t.recolorer * (t.whitener * xs.values);
  out.labels = xs.labels;
  out.original_dimension = xs.original_dimension;
  return out;
}

}  // namespace qcoral
