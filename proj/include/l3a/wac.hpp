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

// Weighted analytic classifier.
//
// The classifier is the closed-form weighted ridge solution
//
//   W = (X' Ω X + γ I)^-1 X' Ω Y
//
// over every sample seen so far. Only R = (X' Ω X + γ I)^-1, W and the
// per-class label counts are carried between phases; past samples are not.
// A phase with features X_t, sample weights ω_t and augmented labels
// Y_t = [pseudo | true] is absorbed by
//
//   R_t = R_{t-1} - R_{t-1} X_t' (Ω_t^-1 + X_t R_{t-1} X_t')^-1 X_t R_{t-1}
//   W_t = W_pad + R_t X_t' Ω_t (Y_t - X_t W_pad),   W_pad = [W_{t-1} | 0]
//
// which reproduces the joint solve exactly, including the old-class columns
// that receive pseudo-labels.

#pragma once

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "l3a/data_model.hpp"
#include "l3a/error.hpp"
#include "l3a/feature_expansion.hpp"
#include "l3a/pseudo_label.hpp"

namespace l3a {

enum class WeightingMode { inv_sqrt, inv, inv_log, none };

inline constexpr double kDefaultGamma = 1000.0;
inline constexpr Index kDefaultBatchSize = 256;

// ---------------------------------------------------------------------------
// Class frequencies and weights

// True-label counts per classifier column, cumulative over phases.
struct FrequencyTable {
  std::vector<std::uint64_t> counts;

  std::size_t size() const { return counts.size(); }
  bool operator==(const FrequencyTable&) const = default;
};

// Adds the column sums of `truth` to columns [first_column, first_column +
// truth.cols()), growing the table as needed. Pseudo-labels never go here.
inline FrequencyTable update_frequencies(FrequencyTable freq, const Matrix& truth,
                                         std::size_t first_column) {
  if (first_column > freq.counts.size()) {
    throw InvalidArgument("update_frequencies: column gap before " +
                          std::to_string(first_column));
  }
  const std::size_t end = first_column + static_cast<std::size_t>(truth.cols());
  if (freq.counts.size() < end) freq.counts.resize(end, 0);
  for (Index j = 0; j < truth.cols(); ++j) {
    std::uint64_t sum = 0;
    for (Index i = 0; i < truth.rows(); ++i) {
      if (truth(i, j) != 0.0) ++sum;
    }
    freq.counts[first_column + static_cast<std::size_t>(j)] += sum;
  }
  return freq;
}

inline double class_weight(std::uint64_t count, WeightingMode mode) {
  if (count == 0) throw InvalidArgument("class weight requested for a zero-count class");
  const double f = static_cast<double>(count);
  switch (mode) {
    case WeightingMode::inv_sqrt: return 1.0 / std::sqrt(f);
    case WeightingMode::inv: return 1.0 / f;
    case WeightingMode::inv_log: return 1.0 / (std::log(f) + 1.0);
    case WeightingMode::none: return 1.0;
  }
  return 1.0;
}

class WeightVector {
 public:
  WeightVector(const FrequencyTable& freq, WeightingMode mode) : mode_(mode) {
    values_.reserve(freq.size());
    for (std::uint64_t c : freq.counts) {
      values_.push_back(c == 0 ? 0.0 : class_weight(c, mode));
    }
  }

  WeightingMode mode() const { return mode_; }
  std::size_t size() const { return values_.size(); }

  // Throws for classes that have not been seen with a true label yet.
  double at(std::size_t k) const {
    if (k >= values_.size()) {
      throw InvalidArgument("class weight: column " + std::to_string(k) + " unknown");
    }
    if (values_[k] == 0.0) {
      throw InvalidArgument("class weight: column " + std::to_string(k) +
                            " has zero frequency");
    }
    return values_[k];
  }

 private:
  std::vector<double> values_;
  WeightingMode mode_;
};

inline WeightVector class_weights(const FrequencyTable& freq, WeightingMode mode) {
  return WeightVector(freq, mode);
}

// Mean class weight over each row's active labels; rows without any active
// label get weight 1.
inline Vector sample_weights(const Matrix& augmented, const WeightVector& v) {
  Vector omega(augmented.rows());
  for (Index i = 0; i < augmented.rows(); ++i) {
    double sum = 0.0;
    int active = 0;
    for (Index k = 0; k < augmented.cols(); ++k) {
      if (augmented(i, k) != 0.0) {
        sum += augmented(i, k) * v.at(static_cast<std::size_t>(k));
        ++active;
      }
    }
    omega(i) = active == 0 ? 1.0 : sum / active;
  }
  return omega;
}

inline Vector sample_weights(const AugmentedLabels& augmented, const WeightVector& v) {
  return sample_weights(augmented.matrix, v);
}

// ---------------------------------------------------------------------------
// Model state

struct ModelState {
  Matrix weights;          // d_buf x |C^{1:t}|
  Matrix autocorrelation;  // R, d_buf x d_buf
  FrequencyTable freq;     // one count per weights column
  std::uint32_t phase = 0;
  double gamma = kDefaultGamma;
  BufferDescriptor buffer;

  Index num_classes() const { return weights.cols(); }
  Index buffer_dim() const { return autocorrelation.rows(); }
};

// R_0 = I / γ, which is (X'ΩX + γI)^-1 with no data. W_0 has no columns.
inline ModelState init_state(double gamma, const BufferDescriptor& buffer) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("gamma must be a positive finite number");
  }
  if (buffer.buffer_dim < 1) throw InvalidArgument("buffer dimension must be >= 1");
  ModelState s;
  s.gamma = gamma;
  s.buffer = buffer;
  s.autocorrelation = Matrix::Identity(buffer.buffer_dim, buffer.buffer_dim) / gamma;
  s.weights.resize(buffer.buffer_dim, 0);
  return s;
}

inline ModelState init_state(double gamma, std::uint32_t buffer_dim) {
  return init_state(gamma, BufferDescriptor{0, buffer_dim, 0});
}

namespace wac_detail {

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string(what) + " contains non-finite values");
}

inline void require_positive_weights(const Vector& omega) {
  for (Index i = 0; i < omega.size(); ++i) {
    if (!(omega(i) > 0.0) || !std::isfinite(omega(i))) {
      throw InvalidArgument("sample weight " + std::to_string(i) +
                            " is not a positive finite number");
    }
  }
}

}  // namespace wac_detail

// Direct solve of the weighted ridge problem over the stacked system. Used
// for single-shot training and as the reference for the recursion.
inline Matrix joint_solve(const Matrix& features, const Vector& omega,
                          const Matrix& labels, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (features.rows() != omega.size() || features.rows() != labels.rows()) {
    throw DimensionMismatch("joint_solve: row counts differ");
  }
  wac_detail::require_finite(features, "joint_solve features");
  wac_detail::require_finite(labels, "joint_solve labels");
  wac_detail::require_positive_weights(omega);

  const Matrix weighted = omega.asDiagonal() * features;
  Matrix gram = features.transpose() * weighted;
  gram.diagonal().array() += gamma;
  const Matrix rhs = weighted.transpose() * labels;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("joint_solve: regularized Gram matrix is not positive definite");
  }
  return llt.solve(rhs);
}

// Woodbury update of R for one phase, in row batches of at most
// `batch_size`. Each batch is itself an exact rank-b update, so the result
// does not depend on the batching. R is re-symmetrized after every batch.
inline Matrix update_R(const Matrix& previous, const Matrix& features,
                       const Vector& omega, Index batch_size = kDefaultBatchSize) {
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (previous.rows() != previous.cols()) {
    throw DimensionMismatch("update_R: R is not square");
  }
  if (features.cols() != previous.rows()) {
    throw DimensionMismatch("update_R: features have " + std::to_string(features.cols()) +
                            " columns, R is " + std::to_string(previous.rows()) + " wide");
  }
  if (features.rows() != omega.size()) {
    throw DimensionMismatch("update_R: one weight per sample required");
  }
  wac_detail::require_finite(features, "update_R features");
  wac_detail::require_positive_weights(omega);

  Matrix R = previous;
  for (Index start = 0; start < features.rows(); start += batch_size) {
    const Index b = std::min(batch_size, features.rows() - start);
    const auto X = features.middleRows(start, b);
    const Matrix XR = X * R;  // b x d
    Matrix inner = XR * X.transpose();
    inner.diagonal() += omega.segment(start, b).cwiseInverse();
    Eigen::LLT<Matrix> llt(inner);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("update_R: inner system of batch at row " +
                           std::to_string(start) + " is not solvable");
    }
    R.noalias() -= XR.transpose() * llt.solve(XR);
    R = (0.5 * (R + R.transpose())).eval();
  }
  wac_detail::require_finite(R, "update_R result");
  return R;
}

// W_t from W_{t-1} and the already updated R_t. `augmented.old_width` must
// equal the previous class count; new classes get zero-initialized columns
// before the correction.
inline Matrix update_W(const Matrix& previous, const Matrix& R, const Matrix& features,
                       const Vector& omega, const AugmentedLabels& augmented) {
  if (augmented.old_width != previous.cols()) {
    throw DimensionMismatch("update_W: pseudo-label width " +
                            std::to_string(augmented.old_width) +
                            " does not match " + std::to_string(previous.cols()) +
                            " learned classes");
  }
  if (previous.rows() != R.rows() || features.cols() != R.rows()) {
    throw DimensionMismatch("update_W: classifier, R and features disagree on d_buf");
  }
  if (features.rows() != omega.size() || features.rows() != augmented.rows()) {
    throw DimensionMismatch("update_W: row counts differ");
  }
  wac_detail::require_finite(features, "update_W features");
  wac_detail::require_finite(augmented.matrix, "update_W labels");
  wac_detail::require_positive_weights(omega);

  Matrix W = Matrix::Zero(previous.rows(), augmented.cols());
  W.leftCols(previous.cols()) = previous;
  const Matrix residual = omega.asDiagonal() * (augmented.matrix - features * W);
  W.noalias() += R * (features.transpose() * residual);
  wac_detail::require_finite(W, "update_W result");
  return W;
}

// One phase: R, then W, then the phase counter. Frequencies are the
// caller's job since the sample weights depend on them.
inline void absorb_phase(ModelState& state, const Matrix& features, const Vector& omega,
                         const AugmentedLabels& augmented,
                         Index batch_size = kDefaultBatchSize) {
  Matrix R = update_R(state.autocorrelation, features, omega, batch_size);
  Matrix W = update_W(state.weights, R, features, omega, augmented);
  state.autocorrelation = std::move(R);
  state.weights = std::move(W);
  state.phase += 1;
}

inline ScoreMatrix predict(const Matrix& expanded, const Matrix& weights,
                           ScoreTransform transform) {
  return predict_scores(expanded, weights, transform);
}

}  // namespace l3a
