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

// End-to-end training over a phase stream: pseudo-labels, frequency update,
// sample weights, buffer expansion, recursive classifier update, and
// cumulative evaluation after every phase. Also hosts the comparison of the
// recursive classifier against a joint solve over the assembled system.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "l3a/data_model.hpp"
#include "l3a/error.hpp"
#include "l3a/feature_expansion.hpp"
#include "l3a/metrics.hpp"
#include "l3a/pseudo_label.hpp"
#include "l3a/wac.hpp"

namespace l3a {

inline constexpr std::uint32_t kFullScaleBufferSize = 8192;
inline constexpr std::uint32_t kDeskBufferSize = 1024;

struct RunConfig {
  double gamma = kDefaultGamma;
  std::uint32_t buffer_size = kDeskBufferSize;
  double eta = kDefaultEta;
  WeightingMode weighting = WeightingMode::inv_sqrt;
  ScoreTransform transform = ScoreTransform::sigmoid;
  Index batch_size = kDefaultBatchSize;
  std::uint64_t seed = 0;
  double f1_threshold = 0.5;

  void validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be > 0");
    if (buffer_size < 1) throw InvalidArgument("buffer size must be >= 1");
    if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("eta must lie in (0, 1)");
    if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
    if (!std::isfinite(f1_threshold)) throw InvalidArgument("F1 threshold must be finite");
  }

  bool operator==(const RunConfig&) const = default;
};

// Raised for any failure inside a phase; carries the phase id.
class PhaseError : public Error {
 public:
  PhaseError(std::uint32_t phase, const std::string& what)
      : Error("phase " + std::to_string(phase) + ": " + what), phase_(phase) {}
  std::uint32_t phase() const noexcept { return phase_; }

 private:
  std::uint32_t phase_;
};

// What one phase fed into the classifier update.
struct PhaseTrace {
  Matrix expanded;
  Vector omega;
  AugmentedLabels labels;
  Index pseudo_labels = 0;
};

class Learner {
 public:
  Learner(RunConfig config, std::uint32_t input_dim)
      : config_(validated(config)),
        buffer_(input_dim, config.buffer_size, config.seed),
        state_(init_state(config.gamma, buffer_.descriptor())) {}

  // Continue from a checkpoint. Gamma, buffer size and seed must match.
  Learner(RunConfig config, ModelState resumed)
      : config_(validated(config)),
        buffer_(resumed.buffer),
        state_(std::move(resumed)) {
    if (state_.gamma != config_.gamma) {
      throw InvalidArgument("resume: checkpoint gamma differs from configuration");
    }
    if (state_.buffer.buffer_dim != config_.buffer_size ||
        state_.buffer.seed != config_.seed) {
      throw InvalidArgument("resume: checkpoint buffer (size/seed) differs from configuration");
    }
    if (state_.weights.rows() != state_.buffer_dim() ||
        state_.autocorrelation.cols() != state_.buffer_dim() ||
        static_cast<Index>(state_.freq.size()) != state_.num_classes()) {
      throw DimensionMismatch("resume: inconsistent model state");
    }
  }

  // Absorb one training phase. `true_labels` holds only this phase's classes.
  PhaseTrace learn_phase(const Matrix& features, const Matrix& true_labels) {
    if (features.rows() != true_labels.rows()) {
      throw DimensionMismatch("learn_phase: feature and label row counts differ");
    }
    check_multi_hot(true_labels, "learn_phase");
    PhaseTrace trace;
    trace.expanded = buffer_.expand(features);

    Matrix pseudo(features.rows(), state_.num_classes());
    if (state_.num_classes() > 0) {
      pseudo = threshold_pseudo_labels(
          predict_scores(trace.expanded, state_.weights, config_.transform), config_.eta);
    }
    trace.pseudo_labels = static_cast<Index>(pseudo.sum());
    trace.labels = augment_labels(pseudo, true_labels);

    state_.freq = update_frequencies(std::move(state_.freq), true_labels,
                                     static_cast<std::size_t>(trace.labels.old_width));
    trace.omega = sample_weights(trace.labels, class_weights(state_.freq, config_.weighting));
    absorb_phase(state_, trace.expanded, trace.omega, trace.labels, config_.batch_size);
    return trace;
  }

  ScoreMatrix predict(const Matrix& features) const {
    return predict_scores(buffer_.expand(features), state_.weights, config_.transform);
  }

  const ModelState& state() const { return state_; }
  const BufferLayer& buffer() const { return buffer_; }
  const RunConfig& config() const { return config_; }

 private:
  static const RunConfig& validated(const RunConfig& c) {
    c.validate();
    return c;
  }

  RunConfig config_;
  BufferLayer buffer_;
  ModelState state_;
};

// Scores the learned classes C^{1:t} (t = state phase) on D^test_{1:t}.
inline PhaseReport evaluate(const Learner& learner, const PhaseManifest& manifest,
                            std::span<const PhaseDataset> test) {
  const std::uint32_t t = learner.state().phase;
  if (t < 1) throw InvalidArgument("evaluate: model has not learned any phase");
  const auto classes = manifest.cumulative_classes(t);
  if (static_cast<Index>(classes.size()) != learner.state().num_classes()) {
    throw DimensionMismatch("evaluate: model has " +
                            std::to_string(learner.state().num_classes()) +
                            " classes, manifest phases 1.." + std::to_string(t) +
                            " have " + std::to_string(classes.size()));
  }
  const LabeledSet pool = cumulative_test(test, t);
  Matrix labels(pool.labels.rows(), static_cast<Index>(classes.size()));
  for (std::size_t j = 0; j < classes.size(); ++j) {
    labels.col(static_cast<Index>(j)) = pool.labels.col(classes[j]);
  }
  const ScoreMatrix scores = learner.predict(pool.features);

  PhaseReport report;
  report.phase = t;
  report.n_test = pool.features.rows();
  const MapResult map = mean_average_precision(scores.scores, labels);
  report.map = map.map;
  for (std::size_t j = 0; j < classes.size(); ++j) {
    if (map.per_class[j]) {
      report.per_class_ap[classes[j]] = *map.per_class[j];
    } else {
      report.excluded_classes.push_back(classes[j]);
    }
  }
  const F1Scores f1 = cf1_of1(scores.scores, labels, learner.config().f1_threshold);
  report.cf1 = f1.cf1;
  report.of1 = f1.of1;
  return report;
}

inline void check_stream(const PhaseManifest& manifest, std::span<const PhaseDataset> train,
                         std::span<const PhaseDataset> test) {
  if (train.size() != manifest.num_phases()) {
    throw DimensionMismatch("stream: " + std::to_string(train.size()) +
                            " training phases for a " +
                            std::to_string(manifest.num_phases()) + "-phase manifest");
  }
  if (!test.empty() && test.size() != manifest.num_phases()) {
    throw DimensionMismatch("stream: test phase count differs from manifest");
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& ds = train[i];
    check_dataset(ds);
    if (ds.phase_id != i + 1 || ds.full_labels) {
      throw InvalidArgument("stream: training split " + std::to_string(i + 1) +
                            " is out of order or carries full labels");
    }
    if (ds.features.cols() != manifest.feature_dim() ||
        ds.labels.cols() != static_cast<Index>(manifest.phase(ds.phase_id).classes.size())) {
      throw DimensionMismatch("stream: training split " + std::to_string(i + 1) +
                              " has the wrong feature or label width");
    }
  }
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& ds = test[i];
    check_dataset(ds);
    if (ds.phase_id != i + 1 || !ds.full_labels ||
        ds.features.cols() != manifest.feature_dim() ||
        ds.labels.cols() != manifest.num_classes()) {
      throw InvalidArgument("stream: test split " + std::to_string(i + 1) + " is malformed");
    }
  }
}

struct TrainingResult {
  ModelState state;
  RunReport report;
};

// Phases resumed.phase + 1 .. T (1 .. T without `resumed`). `on_phase` sees
// the state after each phase, e.g. for checkpointing.
inline TrainingResult run_training(
    const RunConfig& config, const PhaseManifest& manifest,
    std::span<const PhaseDataset> train, std::span<const PhaseDataset> test,
    std::optional<ModelState> resumed = std::nullopt,
    const std::function<void(const ModelState&, const PhaseReport&)>& on_phase = {}) {
  config.validate();
  check_stream(manifest, train, test);
  if (test.empty()) throw InvalidArgument("run_training: no test splits");

  Learner learner = resumed ? Learner(config, std::move(*resumed))
                            : Learner(config, manifest.feature_dim());
  if (learner.state().buffer.input_dim != manifest.feature_dim()) {
    throw DimensionMismatch("run_training: checkpoint input dim differs from manifest");
  }
  const std::uint32_t first = learner.state().phase + 1;
  if (first > manifest.num_phases()) {
    throw InvalidArgument("run_training: nothing left to learn after phase " +
                          std::to_string(first - 1));
  }
  std::vector<PhaseReport> reports;
  for (std::uint32_t t = first; t <= manifest.num_phases(); ++t) {
    const auto& ds = train[t - 1];
    try {
      const PhaseTrace trace = learner.learn_phase(ds.features, ds.labels);
      PhaseReport report = evaluate(learner, manifest, test);
      report.n_train = ds.rows();
      report.pseudo_labels = trace.pseudo_labels;
      if (on_phase) on_phase(learner.state(), report);
      reports.push_back(std::move(report));
    } catch (const PhaseError&) {
      throw;
    } catch (const Error& e) {
      throw PhaseError(t, e.what());
    }
  }
  return {learner.state(), aggregate_run(std::move(reports), first)};
}

// ---------------------------------------------------------------------------
// Recursive vs. joint comparison

struct DiffReport {
  double relative_frobenius = 0.0;
  double max_abs = 0.0;
  std::vector<double> per_column_max_abs;
  Index total_rows = 0;
  Index pseudo_labels = 0;
  std::uint32_t phases = 0;
  Matrix recursive;
  Matrix joint;
};

// Direct solves beyond this many matrix entries (stacked features + Gram)
// are refused.
inline constexpr double kMaxOracleEntries = 6.0e7;

// Relative Frobenius and max-abs differences between two classifiers.
inline DiffReport compare_classifiers(Matrix recursive, Matrix joint) {
  if (recursive.rows() != joint.rows() || recursive.cols() != joint.cols()) {
    throw DimensionMismatch("compare_classifiers: shapes differ");
  }
  DiffReport out;
  const Matrix diff = recursive - joint;
  const double denom = joint.norm();
  out.relative_frobenius = denom > 0.0 ? diff.norm() / denom : diff.norm();
  out.max_abs = diff.size() == 0 ? 0.0 : diff.cwiseAbs().maxCoeff();
  for (Index j = 0; j < diff.cols(); ++j) {
    out.per_column_max_abs.push_back(diff.col(j).cwiseAbs().maxCoeff());
  }
  out.recursive = std::move(recursive);
  out.joint = std::move(joint);
  return out;
}

// Stacks the per-phase traces into one block system: phase t's rows carry
// its pseudo-labels in the old-class columns, its true labels in its own
// columns and zeros for classes introduced later.
struct BlockSystem {
  Matrix features;
  Vector omega;
  Matrix labels;
};

inline BlockSystem assemble_block_system(std::span<const PhaseTrace> traces) {
  Index rows = 0, width = 0, dim = -1;
  for (const auto& tr : traces) {
    rows += tr.expanded.rows();
    width = std::max(width, tr.labels.cols());
    if (dim < 0) dim = tr.expanded.cols();
    if (tr.expanded.cols() != dim) throw DimensionMismatch("block system: d_buf differs");
  }
  BlockSystem out;
  out.features.resize(rows, std::max<Index>(dim, 0));
  out.omega.resize(rows);
  out.labels = Matrix::Zero(rows, width);
  Index at = 0;
  for (const auto& tr : traces) {
    const Index n = tr.expanded.rows();
    out.features.middleRows(at, n) = tr.expanded;
    out.omega.segment(at, n) = tr.omega;
    out.labels.block(at, 0, n, tr.labels.cols()) = tr.labels.matrix;
    at += n;
  }
  return out;
}

inline DiffReport run_oracle_compare(const RunConfig& config, const PhaseManifest& manifest,
                                     std::span<const PhaseDataset> train) {
  config.validate();
  check_stream(manifest, train, {});
  Index rows = 0;
  for (const auto& ds : train) rows += ds.rows();
  const double d = config.buffer_size;
  if (static_cast<double>(rows) * d + d * d > kMaxOracleEntries) {
    throw InfeasibleScale("oracle: " + std::to_string(rows) + " samples x d_buf " +
                          std::to_string(config.buffer_size) +
                          " is too large for a direct solve");
  }
  Learner learner(config, manifest.feature_dim());
  std::vector<PhaseTrace> traces;
  Index pseudo = 0;
  for (const auto& ds : train) {
    try {
      traces.push_back(learner.learn_phase(ds.features, ds.labels));
    } catch (const Error& e) {
      throw PhaseError(ds.phase_id, e.what());
    }
    pseudo += traces.back().pseudo_labels;
  }
  const BlockSystem block = assemble_block_system(traces);
  DiffReport out = compare_classifiers(
      learner.state().weights,
      joint_solve(block.features, block.omega, block.labels, config.gamma));
  out.total_rows = rows;
  out.pseudo_labels = pseudo;
  out.phases = manifest.num_phases();
  return out;
}

// ---------------------------------------------------------------------------
// Names and reports

inline std::string_view to_string(WeightingMode m) {
  switch (m) {
    case WeightingMode::inv_sqrt: return "inv-sqrt";
    case WeightingMode::inv: return "inv";
    case WeightingMode::inv_log: return "inv-log";
    case WeightingMode::none: return "none";
  }
  return "?";
}

inline std::string_view to_string(ScoreTransform t) {
  return t == ScoreTransform::sigmoid ? "sigmoid" : "identity";
}

inline WeightingMode parse_weighting(std::string_view s) {
  for (auto m : {WeightingMode::inv_sqrt, WeightingMode::inv, WeightingMode::inv_log,
                 WeightingMode::none}) {
    if (to_string(m) == s) return m;
  }
  throw InvalidArgument("unknown weighting mode '" + std::string(s) + "'");
}

inline ScoreTransform parse_transform(std::string_view s) {
  if (s == "sigmoid") return ScoreTransform::sigmoid;
  if (s == "identity") return ScoreTransform::identity;
  throw InvalidArgument("unknown score transform '" + std::string(s) + "'");
}

inline nlohmann::json to_json(const RunConfig& c) {
  return {{"gamma", c.gamma},
          {"buffer_size", c.buffer_size},
          {"eta", c.eta},
          {"weighting", to_string(c.weighting)},
          {"transform", to_string(c.transform)},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"f1_threshold", c.f1_threshold}};
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.gamma = j.at("gamma").get<double>();
  c.buffer_size = j.at("buffer_size").get<std::uint32_t>();
  c.eta = j.at("eta").get<double>();
  c.weighting = parse_weighting(j.at("weighting").get<std::string>());
  c.transform = parse_transform(j.at("transform").get<std::string>());
  c.batch_size = j.at("batch_size").get<Index>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.f1_threshold = j.at("f1_threshold").get<double>();
  c.validate();
  return c;
}

inline nlohmann::json to_json(const PhaseReport& r) {
  nlohmann::json ap = nlohmann::json::object();
  for (const auto& [c, v] : r.per_class_ap) ap[std::to_string(c)] = v;
  return {{"phase", r.phase},
          {"mAP", r.map},
          {"CF1", r.cf1},
          {"OF1", r.of1},
          {"per_class_AP", ap},
          {"excluded_classes", r.excluded_classes},
          {"n_test", r.n_test},
          {"n_train", r.n_train},
          {"pseudo_labels", r.pseudo_labels}};
}

inline nlohmann::json to_json(const RunReport& r, const RunConfig& config) {
  nlohmann::json phases = nlohmann::json::array();
  std::vector<std::uint32_t> ids;
  std::vector<double> map, cf1, of1;
  for (const auto& p : r.phases) {
    phases.push_back(to_json(p));
    ids.push_back(p.phase);
    map.push_back(p.map);
    cf1.push_back(p.cf1);
    of1.push_back(p.of1);
  }
  return {{"config", to_json(config)},
          {"phase_ids", ids},
          {"mAP", map},
          {"CF1", cf1},
          {"OF1", of1},
          {"average_mAP", r.average_map},
          {"last_mAP", r.last_map},
          {"phases", phases}};
}

inline nlohmann::json to_json(const DiffReport& d, const RunConfig& config) {
  return {{"config", to_json(config)},
          {"phases", d.phases},
          {"total_rows", d.total_rows},
          {"pseudo_labels", d.pseudo_labels},
          {"relative_frobenius", d.relative_frobenius},
          {"max_abs", d.max_abs},
          {"per_column_max_abs", d.per_column_max_abs}};
}

}  // namespace l3a
