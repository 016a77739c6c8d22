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

// Multi-label evaluation: per-class average precision, mAP, macro (CF1) and
// micro (OF1) F1, and run-level aggregates.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "l3a/data_model.hpp"
#include "l3a/error.hpp"

namespace l3a {

// Samples ranked by descending score, ties by ascending index. AP is the
// mean over positives of the precision at each positive's rank.
inline double average_precision(const Eigen::Ref<const Vector>& scores,
                                const Eigen::Ref<const Vector>& labels) {
  if (scores.size() != labels.size()) {
    throw DimensionMismatch("average_precision: score and label lengths differ");
  }
  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores(a) > scores(b); });
  double sum = 0.0;
  Index hits = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels(order[r]) != 0.0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) throw InvalidArgument("average_precision: no positive labels");
  return sum / static_cast<double>(hits);
}

struct MapResult {
  double map = 0.0;
  std::vector<std::optional<double>> per_class;  // nullopt: no positives
  std::vector<Index> excluded;
};

inline MapResult mean_average_precision(const Matrix& scores, const Matrix& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw DimensionMismatch("mean_average_precision: score and label shapes differ");
  }
  MapResult out;
  double sum = 0.0;
  Index scored = 0;
  for (Index k = 0; k < labels.cols(); ++k) {
    if ((labels.col(k).array() != 0.0).any()) {
      const double ap = average_precision(scores.col(k), labels.col(k));
      out.per_class.emplace_back(ap);
      sum += ap;
      ++scored;
    } else {
      out.per_class.emplace_back(std::nullopt);
      out.excluded.push_back(k);
    }
  }
  if (scored == 0) throw InvalidArgument("mean_average_precision: no class has positives");
  out.map = sum / static_cast<double>(scored);
  return out;
}

struct F1Scores {
  double cf1 = 0.0;
  double of1 = 0.0;
};

// Predictions are score >= threshold. A class with no positives and no
// predictions is left out of CF1; a class with TP = 0 otherwise scores 0.
// Either average is 0 when it has nothing to average.
inline F1Scores cf1_of1(const Matrix& scores, const Matrix& labels, double threshold) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw DimensionMismatch("cf1_of1: score and label shapes differ");
  }
  if (!std::isfinite(threshold)) throw InvalidArgument("cf1_of1: threshold must be finite");
  std::uint64_t tp_all = 0, fp_all = 0, fn_all = 0;
  double f1_sum = 0.0;
  Index counted = 0;
  for (Index k = 0; k < labels.cols(); ++k) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (Index i = 0; i < labels.rows(); ++i) {
      const bool predicted = scores(i, k) >= threshold;
      const bool positive = labels(i, k) != 0.0;
      tp += predicted && positive;
      fp += predicted && !positive;
      fn += !predicted && positive;
    }
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
    if (tp + fp + fn == 0) continue;
    f1_sum += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    ++counted;
  }
  F1Scores out;
  out.cf1 = counted == 0 ? 0.0 : f1_sum / static_cast<double>(counted);
  const std::uint64_t denom = 2 * tp_all + fp_all + fn_all;
  out.of1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp_all) / static_cast<double>(denom);
  return out;
}

struct PhaseReport {
  std::uint32_t phase = 0;
  double map = 0.0;
  double cf1 = 0.0;
  double of1 = 0.0;
  std::map<ClassId, double> per_class_ap;
  std::vector<ClassId> excluded_classes;  // no positives in the test set
  Index n_test = 0;
  Index n_train = 0;
  Index pseudo_labels = 0;
};

struct RunReport {
  std::vector<PhaseReport> phases;
  double average_map = 0.0;
  double last_map = 0.0;
};

// Phase ids must run first_phase, first_phase + 1, ... (1..T for a full run).
inline RunReport aggregate_run(std::vector<PhaseReport> phases,
                               std::uint32_t first_phase = 1) {
  if (phases.empty()) throw InvalidArgument("aggregate_run: no phases");
  double sum = 0.0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (phases[i].phase != first_phase + i) {
      throw InvalidArgument("aggregate_run: phase ids must ascend from " +
                            std::to_string(first_phase) + " without gaps");
    }
    sum += phases[i].map;
  }
  RunReport out;
  out.average_map = sum / static_cast<double>(phases.size());
  out.last_map = phases.back().map;
  out.phases = std::move(phases);
  return out;
}

}  // namespace l3a
