/*
 * Copyright 2026 The L3A Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Pseudo-labels for previously learned classes.
//
// The frozen classifier from the previous phase scores the current phase's
// samples on old classes; scores at or above eta become positive labels,
// which are joined column-wise in front of the current true labels.

#pragma once

#include <cmath>
#include <string>

#include "l3a/data_model.hpp"
#include "l3a/error.hpp"

namespace l3a {

enum class ScoreTransform { identity, sigmoid };

inline constexpr double kDefaultEta = 0.7;

struct ScoreMatrix {
  Matrix scores;
  ScoreTransform transform = ScoreTransform::sigmoid;
};

inline ScoreMatrix predict_scores(const Matrix& expanded, const Matrix& weights,
                                  ScoreTransform transform) {
  if (expanded.cols() != weights.rows()) {
    throw DimensionMismatch("predict: features have " +
                            std::to_string(expanded.cols()) +
                            " columns, classifier has " +
                            std::to_string(weights.rows()) + " rows");
  }
  ScoreMatrix out{expanded * weights, transform};
  if (transform == ScoreTransform::sigmoid) {
    out.scores = out.scores.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  }
  return out;
}

// 1 where score >= eta.
inline Matrix threshold_pseudo_labels(const ScoreMatrix& scores, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw InvalidArgument("pseudo-label threshold must lie in (0, 1)");
  }
  return (scores.scores.array() >= eta).cast<double>().matrix();
}

struct AugmentedLabels {
  Matrix matrix;         // [pseudo | true]
  Index old_width = 0;

  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }
  auto pseudo() const { return matrix.leftCols(old_width); }
  auto truth() const { return matrix.rightCols(matrix.cols() - old_width); }
};

inline AugmentedLabels augment_labels(const Matrix& pseudo, const Matrix& truth) {
  if (pseudo.rows() != truth.rows()) {
    throw DimensionMismatch("augment_labels: " + std::to_string(pseudo.rows()) +
                            " pseudo-label rows vs " + std::to_string(truth.rows()) +
                            " true-label rows");
  }
  AugmentedLabels out;
  out.old_width = pseudo.cols();
  out.matrix.resize(truth.rows(), pseudo.cols() + truth.cols());
  out.matrix.leftCols(pseudo.cols()) = pseudo;
  out.matrix.rightCols(truth.cols()) = truth;
  return out;
}

}  // namespace l3a
