#pragma once

// 1-nearest-neighbor prediction and accuracy scoring.

#include <algorithm>
#include <limits>
#include <vector>

#include "qcoral/linalg.hpp"

namespace qcoral {

struct PredictionReport {
  std::vector<int> predicted;
  double accuracy = 0.0;  // only meaningful when the test set is labeled
  /// confusion(truth, predicted); classes are 0..class_count-1.
  Eigen::MatrixXi confusion;
};

/// Label of the Euclidean-nearest training column for every test column;
/// ties go to the lowest training index.
inline std::vector<int> nearest_labels(const DataMatrix& train, const Matrix& test) {
  const Index n = train.samples();
  std::vector<int> out(static_cast<std::size_t>(test.cols()));
  for (Index j = 0; j < test.cols(); ++j) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      const double d = (train.values.col(i) - test.col(j)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    out[static_cast<std::size_t>(j)] = (*train.labels)[static_cast<std::size_t>(best)];
  }
  return out;
}

inline PredictionReport knn_predict(const DataMatrix& train, const DataMatrix& test) {
  train.validate();
  test.validate();
  if (!train.labels) throw ValidationError("classify", "training set has no labels");
  if (train.samples() == 0) throw DataError("classify", "empty training set");
  if (train.dimension() != test.dimension()) {
    throw DimensionError("classify", "train dimension " + std::to_string(train.dimension()) +
                                         " != test dimension " + std::to_string(test.dimension()));
  }
  PredictionReport r;
  r.predicted = nearest_labels(train, test.values);
  if (test.labels) {
    int classes = 0;
    for (int l : *train.labels) classes = std::max(classes, l + 1);
    for (int l : *test.labels) classes = std::max(classes, l + 1);
    r.confusion = Eigen::MatrixXi::Zero(classes, classes);
    Index correct = 0;
    for (std::size_t j = 0; j < r.predicted.size(); ++j) {
      const int truth = (*test.labels)[j];
      if (truth < 0) throw ValidationError("classify", "negative test label");
      ++r.confusion(truth, r.predicted[j]);
      if (truth == r.predicted[j]) ++correct;
    }
    r.accuracy = r.predicted.empty() ? 0.0
                                     : static_cast<double>(correct) / static_cast<double>(r.predicted.size());
  }
  return r;
}

}  // namespace qcoral
