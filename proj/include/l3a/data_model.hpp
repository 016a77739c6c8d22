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

// Phase streams for multi-label class-incremental learning.
//
// Classes are dense ids in [0, K). A manifest partitions them into phases
// 1..T. During training a phase only sees labels for its own classes (label
// absence); test splits keep the full K-wide label vector and are evaluated
// cumulatively.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "l3a/error.hpp"
#include "l3a/rng.hpp"

namespace l3a {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using ClassId = std::uint32_t;
using SampleId = std::int64_t;

struct PhaseSpec {
  std::uint32_t id = 0;
  std::vector<ClassId> classes;
};

class PhaseManifest {
 public:
  PhaseManifest() = default;

  // Throws InvalidArgument unless phase ids are 1..T in order and the class
  // lists partition [0, num_classes).
  PhaseManifest(std::uint32_t num_classes, std::uint32_t feature_dim,
                std::vector<PhaseSpec> phases)
      : num_classes_(num_classes),
        feature_dim_(feature_dim),
        phases_(std::move(phases)) {
    validate();
  }

  // T phases over contiguous, near-equal class ranges.
  static PhaseManifest even_split(std::uint32_t num_classes,
                                  std::uint32_t feature_dim,
                                  std::uint32_t num_phases) {
    if (num_phases == 0 || num_phases > num_classes) {
      throw InvalidArgument("even_split: need 1 <= phases <= classes");
    }
    std::vector<PhaseSpec> phases;
    ClassId next = 0;
    for (std::uint32_t t = 0; t < num_phases; ++t) {
      const std::uint32_t width =
          num_classes / num_phases + (t < num_classes % num_phases ? 1 : 0);
      PhaseSpec spec{t + 1, {}};
      for (std::uint32_t j = 0; j < width; ++j) spec.classes.push_back(next++);
      phases.push_back(std::move(spec));
    }
    return PhaseManifest(num_classes, feature_dim, std::move(phases));
  }

  std::uint32_t num_classes() const { return num_classes_; }
  std::uint32_t feature_dim() const { return feature_dim_; }
  std::uint32_t num_phases() const {
    return static_cast<std::uint32_t>(phases_.size());
  }
  const std::vector<PhaseSpec>& phases() const { return phases_; }

  // 1-based.
  const PhaseSpec& phase(std::uint32_t t) const {
    if (t < 1 || t > phases_.size()) {
      throw InvalidArgument("phase id " + std::to_string(t) + " out of range");
    }
    return phases_[t - 1];
  }

  // Classes of phases 1..t in classifier column order.
  std::vector<ClassId> cumulative_classes(std::uint32_t t) const {
    std::vector<ClassId> out;
    for (std::uint32_t p = 1; p <= t; ++p) {
      const auto& cls = phase(p).classes;
      out.insert(out.end(), cls.begin(), cls.end());
    }
    return out;
  }

  std::uint32_t cumulative_width(std::uint32_t t) const {
    std::uint32_t w = 0;
    for (std::uint32_t p = 1; p <= t; ++p) {
      w += static_cast<std::uint32_t>(phase(p).classes.size());
    }
    return w;
  }

  bool operator==(const PhaseManifest& other) const {
    if (num_classes_ != other.num_classes_ ||
        feature_dim_ != other.feature_dim_ ||
        phases_.size() != other.phases_.size()) {
      return false;
    }
    for (std::size_t i = 0; i < phases_.size(); ++i) {
      if (phases_[i].id != other.phases_[i].id ||
          phases_[i].classes != other.phases_[i].classes) {
        return false;
      }
    }
    return true;
  }

 private:
  void validate() const {
    if (num_classes_ == 0) throw InvalidArgument("manifest: num_classes is 0");
    if (feature_dim_ == 0) throw InvalidArgument("manifest: feature_dim is 0");
    if (phases_.empty()) throw InvalidArgument("manifest: no phases");
    std::vector<bool> seen(num_classes_, false);
    for (std::size_t i = 0; i < phases_.size(); ++i) {
      if (phases_[i].id != i + 1) {
        throw InvalidArgument("manifest: phase ids must be 1..T in order");
      }
      if (phases_[i].classes.empty()) {
        throw InvalidArgument("manifest: phase " + std::to_string(i + 1) +
                              " has no classes");
      }
      for (ClassId c : phases_[i].classes) {
        if (c >= num_classes_) {
          throw InvalidArgument("manifest: class " + std::to_string(c) +
                                " outside [0, num_classes)");
        }
        if (seen[c]) {
          throw InvalidArgument("manifest: class " + std::to_string(c) +
                                " appears in more than one phase");
        }
        seen[c] = true;
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw InvalidArgument("manifest: phases do not cover every class");
    }
  }

  std::uint32_t num_classes_ = 0;
  std::uint32_t feature_dim_ = 0;
  std::vector<PhaseSpec> phases_;
};

// One phase of a stream.
//
// Training splits: `labels` is N x |C^t|, columns in the phase's class order.
// Test splits (`full_labels == true`): `labels` is N x K, column = class id.
struct PhaseDataset {
  std::uint32_t phase_id = 0;
  Matrix features;
  Matrix labels;
  std::vector<SampleId> sample_ids;
  bool full_labels = false;

  Index rows() const { return features.rows(); }
};

// A dataset with full K-wide labels before any phase masking.
struct LabeledSet {
  Matrix features;
  Matrix labels;
  std::vector<SampleId> sample_ids;
};

inline void check_multi_hot(const Matrix& labels, const char* what) {
  for (Index i = 0; i < labels.size(); ++i) {
    const double v = labels.data()[i];
    if (v != 0.0 && v != 1.0) {
      throw InvalidArgument(std::string(what) + ": label entries must be 0 or 1");
    }
  }
}

inline void check_dataset(const PhaseDataset& ds) {
  if (ds.features.rows() != ds.labels.rows() ||
      static_cast<std::size_t>(ds.features.rows()) != ds.sample_ids.size()) {
    throw DimensionMismatch("phase " + std::to_string(ds.phase_id) +
                            ": feature, label and id counts differ");
  }
  check_multi_hot(ds.labels, "phase dataset");
}

// Training phases from a fully labeled set. A sample joins phase t iff it
// has at least one positive in C^t, and only the C^t columns are kept; it
// may therefore appear in several phases. Row order follows the source.
inline std::vector<PhaseDataset> split_phases(const PhaseManifest& manifest,
                                              const LabeledSet& full) {
  if (full.labels.cols() != manifest.num_classes()) {
    throw DimensionMismatch("split_phases: labels must be K wide");
  }
  if (full.features.rows() != full.labels.rows() ||
      static_cast<std::size_t>(full.labels.rows()) != full.sample_ids.size()) {
    throw DimensionMismatch("split_phases: row counts differ");
  }
  check_multi_hot(full.labels, "split_phases");

  std::vector<PhaseDataset> out;
  for (const auto& spec : manifest.phases()) {
    std::vector<Index> members;
    for (Index i = 0; i < full.labels.rows(); ++i) {
      for (ClassId c : spec.classes) {
        if (full.labels(i, c) != 0.0) {
          members.push_back(i);
          break;
        }
      }
    }
    PhaseDataset ds;
    ds.phase_id = spec.id;
    ds.features.resize(static_cast<Index>(members.size()), full.features.cols());
    ds.labels.resize(static_cast<Index>(members.size()),
                     static_cast<Index>(spec.classes.size()));
    for (std::size_t r = 0; r < members.size(); ++r) {
      const Index i = members[r];
      const auto row = static_cast<Index>(r);
      ds.features.row(row) = full.features.row(i);
      for (std::size_t j = 0; j < spec.classes.size(); ++j) {
        ds.labels(row, static_cast<Index>(j)) = full.labels(i, spec.classes[j]);
      }
      ds.sample_ids.push_back(full.sample_ids[static_cast<std::size_t>(i)]);
    }
    out.push_back(std::move(ds));
  }
  return out;
}

// D_1^test u ... u D_t^test. Samples present in more than one split are
// kept once (first occurrence).
inline LabeledSet cumulative_test(std::span<const PhaseDataset> test_phases,
                                  std::uint32_t t) {
  if (t < 1 || t > test_phases.size()) {
    throw InvalidArgument("cumulative_test: phase out of range");
  }
  std::unordered_set<SampleId> seen;
  std::vector<std::pair<std::size_t, Index>> rows;
  Index cols = -1, dim = -1;
  for (std::uint32_t p = 0; p < t; ++p) {
    const auto& ds = test_phases[p];
    if (!ds.full_labels) {
      throw InvalidArgument("cumulative_test: phase " + std::to_string(p + 1) +
                            " is not a full-label test split");
    }
    if (ds.rows() == 0) continue;
    if (cols < 0) {
      cols = ds.labels.cols();
      dim = ds.features.cols();
    } else if (cols != ds.labels.cols() || dim != ds.features.cols()) {
      throw DimensionMismatch("cumulative_test: splits disagree on widths");
    }
    for (Index i = 0; i < ds.rows(); ++i) {
      if (seen.insert(ds.sample_ids[static_cast<std::size_t>(i)]).second) {
        rows.emplace_back(p, i);
      }
    }
  }
  LabeledSet out;
  if (cols < 0) {
    cols = test_phases[0].labels.cols();
    dim = test_phases[0].features.cols();
  }
  out.features.resize(static_cast<Index>(rows.size()), dim);
  out.labels.resize(static_cast<Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& ds = test_phases[rows[r].first];
    out.features.row(static_cast<Index>(r)) = ds.features.row(rows[r].second);
    out.labels.row(static_cast<Index>(r)) = ds.labels.row(rows[r].second);
    out.sample_ids.push_back(
        ds.sample_ids[static_cast<std::size_t>(rows[r].second)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic streams.

struct SyntheticSpec {
  std::uint32_t num_classes = 8;
  std::uint32_t feature_dim = 16;
  std::uint32_t samples_per_phase = 64;
  double imbalance_exponent = 0.0;   // alpha >= 0
  double cooccurrence_strength = 0.0;  // rho in [0, 1]
  double noise_sigma = 0.1;           // sigma > 0
  std::uint64_t seed = 0;

  void validate() const {
    if (num_classes == 0) throw InvalidArgument("synthetic: num_classes is 0");
    if (feature_dim == 0) throw InvalidArgument("synthetic: feature_dim is 0");
    if (!(imbalance_exponent >= 0.0) || !std::isfinite(imbalance_exponent)) {
      throw InvalidArgument("synthetic: imbalance exponent must be >= 0");
    }
    if (!(cooccurrence_strength >= 0.0 && cooccurrence_strength <= 1.0)) {
      throw InvalidArgument("synthetic: co-occurrence strength must be in [0, 1]");
    }
    if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
      throw InvalidArgument("synthetic: noise sigma must be > 0");
    }
  }
};

// Probability that an unordered class pair is marked as co-occurring.
inline constexpr double kCooccurrenceDensity = 0.5;

struct SyntheticStream {
  std::vector<PhaseDataset> train;
  std::vector<PhaseDataset> test;
  Matrix prototypes;           // K x d_in, unit rows
  Matrix cooccurrence;         // K x K symmetric 0/1, zero diagonal
};

namespace detail {

enum StreamTag : std::uint64_t {
  kPrototypeStream = 1,
  kCooccurrenceStream = 2,
  kTrainStream = 3,
  kTestStreamBase = 100,
};

class SampleDrawer {
 public:
  SampleDrawer(const SyntheticSpec& spec, const Matrix& prototypes,
               const Matrix& cooccurrence)
      : spec_(spec), prototypes_(prototypes), cooccurrence_(cooccurrence) {
    double running = 0.0;
    for (std::uint32_t k = 0; k < spec.num_classes; ++k) {
      running += std::pow(static_cast<double>(k) + 1.0, -spec.imbalance_exponent);
      cumulative_.push_back(running);
    }
  }

  // Draw `count` samples from `rng`. Per sample: primary class, then one
  // uniform per other class in ascending id order, then d_in noise normals.
  LabeledSet draw(Xoshiro256& rng, std::uint32_t count, SampleId first_id) const {
    const Index K = spec_.num_classes;
    const Index d = spec_.feature_dim;
    LabeledSet out;
    out.features = Matrix::Zero(count, d);
    out.labels = Matrix::Zero(count, K);
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto row = static_cast<Index>(i);
      const auto primary = static_cast<Index>(rng.categorical(cumulative_));
      out.labels(row, primary) = 1.0;
      for (Index j = 0; j < K; ++j) {
        if (j == primary) continue;
        const double p = spec_.cooccurrence_strength * cooccurrence_(primary, j);
        if (rng.uniform() < p) out.labels(row, j) = 1.0;
      }
      for (Index j = 0; j < K; ++j) {
        if (out.labels(row, j) != 0.0) out.features.row(row) += prototypes_.row(j);
      }
      for (Index c = 0; c < d; ++c) {
        out.features(row, c) += spec_.noise_sigma * rng.normal();
      }
      out.sample_ids.push_back(first_id + static_cast<SampleId>(i));
    }
    // Stored at 32-bit precision so in-memory and on-disk streams agree.
    out.features = out.features.cast<float>().cast<double>();
    return out;
  }

 private:
  const SyntheticSpec& spec_;
  const Matrix& prototypes_;
  const Matrix& cooccurrence_;
  std::vector<double> cumulative_;
};

}  // namespace detail

// Training: one pool of T * samples_per_phase samples drawn over all K
// classes, split with split_phases. Test: a fresh pool of samples_per_phase
// samples per phase, keeping those with a positive in C^t, full labels.
inline SyntheticStream generate_synthetic(const SyntheticSpec& spec,
                                          const PhaseManifest& manifest) {
  spec.validate();
  if (manifest.num_classes() != spec.num_classes) {
    throw InvalidArgument("synthetic: manifest class count differs from num_classes");
  }
  if (manifest.feature_dim() != spec.feature_dim) {
    throw InvalidArgument("synthetic: manifest feature_dim differs from the generator");
  }
  const Index K = spec.num_classes;
  const Index d = spec.feature_dim;

  SyntheticStream out;
  {
    auto rng = Xoshiro256::stream(spec.seed, detail::kPrototypeStream);
    out.prototypes.resize(K, d);
    for (Index k = 0; k < K; ++k) {
      for (Index c = 0; c < d; ++c) out.prototypes(k, c) = rng.normal();
      const double norm = out.prototypes.row(k).norm();
      if (norm > 0.0) out.prototypes.row(k) /= norm;
    }
  }
  {
    auto rng = Xoshiro256::stream(spec.seed, detail::kCooccurrenceStream);
    out.cooccurrence = Matrix::Zero(K, K);
    for (Index i = 0; i < K; ++i) {
      for (Index j = i + 1; j < K; ++j) {
        if (rng.bernoulli(kCooccurrenceDensity)) {
          out.cooccurrence(i, j) = out.cooccurrence(j, i) = 1.0;
        }
      }
    }
  }

  detail::SampleDrawer drawer(spec, out.prototypes, out.cooccurrence);
  const std::uint32_t T = manifest.num_phases();
  const SampleId train_count =
      static_cast<SampleId>(T) * static_cast<SampleId>(spec.samples_per_phase);
  {
    auto rng = Xoshiro256::stream(spec.seed, detail::kTrainStream);
    const LabeledSet pool =
        drawer.draw(rng, static_cast<std::uint32_t>(train_count), 0);
    out.train = split_phases(manifest, pool);
  }
  for (std::uint32_t t = 1; t <= T; ++t) {
    auto rng = Xoshiro256::stream(spec.seed, detail::kTestStreamBase + t);
    const SampleId first =
        train_count + static_cast<SampleId>(t - 1) * spec.samples_per_phase;
    const LabeledSet pool = drawer.draw(rng, spec.samples_per_phase, first);
    const auto& classes = manifest.phase(t).classes;
    std::vector<Index> keep;
    for (Index i = 0; i < pool.labels.rows(); ++i) {
      for (ClassId c : classes) {
        if (pool.labels(i, c) != 0.0) {
          keep.push_back(i);
          break;
        }
      }
    }
    PhaseDataset ds;
    ds.phase_id = t;
    ds.full_labels = true;
    ds.features.resize(static_cast<Index>(keep.size()), d);
    ds.labels.resize(static_cast<Index>(keep.size()), K);
    for (std::size_t r = 0; r < keep.size(); ++r) {
      ds.features.row(static_cast<Index>(r)) = pool.features.row(keep[r]);
      ds.labels.row(static_cast<Index>(r)) = pool.labels.row(keep[r]);
      ds.sample_ids.push_back(pool.sample_ids[static_cast<std::size_t>(keep[r])]);
    }
    out.test.push_back(std::move(ds));
  }
  return out;
}

}  // namespace l3a
