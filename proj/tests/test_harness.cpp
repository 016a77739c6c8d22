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

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "l3a/checkpoint.hpp"
#include "l3a/harness.hpp"

namespace l3a {
namespace {

namespace fs = std::filesystem;

struct Desk {
  PhaseManifest manifest;
  SyntheticStream stream;
};

Desk desk_stream(std::uint32_t phases, std::uint64_t seed, double rho = 0.5) {
  SyntheticSpec s;
  s.num_classes = 8;
  s.feature_dim = 16;
  s.samples_per_phase = 64;
  s.imbalance_exponent = 1.0;
  s.cooccurrence_strength = rho;
  s.noise_sigma = 0.3;
  s.seed = seed;
  Desk d{PhaseManifest::even_split(8, 16, phases), {}};
  d.stream = generate_synthetic(s, d.manifest);
  return d;
}

RunConfig desk_config() {
  RunConfig c;
  c.buffer_size = 48;
  c.gamma = 1.0;
  c.seed = 99;
  return c;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(RunConfig, ValidatesRanges) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.gamma, 1000.0);
  EXPECT_EQ(c.eta, 0.7);
  EXPECT_EQ(c.batch_size, 256);
  EXPECT_EQ(c.weighting, WeightingMode::inv_sqrt);
  EXPECT_EQ(c.transform, ScoreTransform::sigmoid);
  auto bad = c;
  bad.gamma = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = c;
  bad.eta = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = c;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = c;
  bad.buffer_size = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(RunConfig, JsonRoundTripAndNames) {
  RunConfig c = desk_config();
  c.weighting = WeightingMode::inv_log;
  c.transform = ScoreTransform::identity;
  EXPECT_EQ(config_from_json(to_json(c)), c);
  EXPECT_EQ(parse_weighting("inv-sqrt"), WeightingMode::inv_sqrt);
  EXPECT_THROW(parse_weighting("sqrt"), InvalidArgument);
  EXPECT_THROW(parse_transform("tanh"), InvalidArgument);
}

TEST(Learner, FirstPhaseHasNoPseudoLabels) {
  const auto d = desk_stream(4, 1);
  for (auto tr : {ScoreTransform::sigmoid, ScoreTransform::identity}) {
    auto c = desk_config();
    c.transform = tr;
    Learner l(c, 16);
    const auto trace = l.learn_phase(d.stream.train[0].features, d.stream.train[0].labels);
    EXPECT_EQ(trace.labels.old_width, 0);
    EXPECT_EQ(trace.pseudo_labels, 0);
  }
}

TEST(RunTraining, SinglePhaseEqualsDirectJointSolve) {
  const auto d = desk_stream(1, 2);
  const auto c = desk_config();
  const auto result = run_training(c, d.manifest, d.stream.train, d.stream.test);
  ASSERT_EQ(result.report.phases.size(), 1u);

  const auto& tr = d.stream.train[0];
  const BufferLayer buffer(16, c.buffer_size, c.seed);
  const Matrix x = buffer.expand(tr.features);
  const auto freq = update_frequencies({}, tr.labels, 0);
  const Vector w = sample_weights(tr.labels, class_weights(freq, c.weighting));
  const Matrix W = joint_solve(x, w, tr.labels, c.gamma);
  const auto& te = d.stream.test[0];
  const Matrix scores = predict_scores(buffer.expand(te.features), W, c.transform).scores;
  const double map = mean_average_precision(scores, te.labels).map;
  EXPECT_NEAR(result.report.last_map, map, 1e-12);
}

TEST(RunTraining, DeskRunIsFastAndReportsEveryPhase) {
  const auto d = desk_stream(4, 3);
  const auto start = std::chrono::steady_clock::now();
  const auto result = run_training(desk_config(), d.manifest, d.stream.train, d.stream.test);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 5.0);
  ASSERT_EQ(result.report.phases.size(), 4u);
  for (std::uint32_t t = 1; t <= 4; ++t) {
    const auto& p = result.report.phases[t - 1];
    EXPECT_EQ(p.phase, t);
    EXPECT_GE(p.map, 0.0);
    EXPECT_LE(p.map, 1.0);
    EXPECT_EQ(p.per_class_ap.size() + p.excluded_classes.size(), 2u * t);
  }
  EXPECT_EQ(result.state.phase, 4u);
  EXPECT_EQ(result.state.num_classes(), 8);
  // true-label counts only
  std::uint64_t total = 0;
  for (auto f : result.state.freq.counts) total += f;
  double truth = 0;
  for (const auto& tr : d.stream.train) truth += tr.labels.sum();
  EXPECT_EQ(static_cast<double>(total), truth);
}

TEST(RunTraining, DeterministicCheckpointsAndReports) {
  const auto d = desk_stream(3, 4);
  const auto dir = fs::temp_directory_path() / "l3a_harness_det";
  fs::create_directories(dir);
  const auto a = run_training(desk_config(), d.manifest, d.stream.train, d.stream.test);
  const auto b = run_training(desk_config(), d.manifest, d.stream.train, d.stream.test);
  save_checkpoint(a.state, dir / "a");
  save_checkpoint(b.state, dir / "b");
  EXPECT_EQ(file_bytes(dir / "a"), file_bytes(dir / "b"));
  EXPECT_EQ(to_json(a.report, desk_config()).dump(), to_json(b.report, desk_config()).dump());
  fs::remove_all(dir);
}

TEST(RunTraining, ResumeMatchesStraightThrough) {
  const auto d = desk_stream(3, 5);
  const auto dir = fs::temp_directory_path() / "l3a_harness_resume";
  fs::create_directories(dir);
  const auto c = desk_config();
  const auto straight = run_training(c, d.manifest, d.stream.train, d.stream.test, std::nullopt,
                                     [&](const ModelState& s, const PhaseReport&) {
                                       if (s.phase == 2) save_checkpoint(s, dir / "p2");
                                     });
  const auto resumed = run_training(c, d.manifest, d.stream.train, d.stream.test,
                                    load_checkpoint(dir / "p2"));
  EXPECT_TRUE(resumed.state.weights == straight.state.weights);
  EXPECT_TRUE(resumed.state.autocorrelation == straight.state.autocorrelation);
  ASSERT_EQ(resumed.report.phases.size(), 1u);
  EXPECT_EQ(resumed.report.phases[0].phase, 3u);
  EXPECT_EQ(resumed.report.last_map, straight.report.last_map);
  fs::remove_all(dir);
}

TEST(RunTraining, ResumeRejectsMismatchedConfig) {
  const auto d = desk_stream(2, 6);
  auto c = desk_config();
  const auto first = run_training(c, d.manifest, d.stream.train, d.stream.test);
  c.gamma = 2.0;
  EXPECT_THROW(Learner(c, first.state), InvalidArgument);
  c = desk_config();
  c.seed = 1;
  EXPECT_THROW(Learner(c, first.state), InvalidArgument);
  // nothing left to learn
  EXPECT_THROW(run_training(desk_config(), d.manifest, d.stream.train, d.stream.test,
                            first.state),
               InvalidArgument);
}

TEST(RunTraining, ErrorsCarryPhaseContext) {
  auto d = desk_stream(3, 7);
  d.stream.train[1].features(0, 0) = std::nan("");
  try {
    run_training(desk_config(), d.manifest, d.stream.train, d.stream.test);
    FAIL();
  } catch (const PhaseError& e) {
    EXPECT_EQ(e.phase(), 2u);
    EXPECT_NE(std::string(e.what()).find("phase 2"), std::string::npos);
  }
}

TEST(RunTraining, RejectsMalformedStreams) {
  auto d = desk_stream(2, 8);
  auto train = d.stream.train;
  std::swap(train[0], train[1]);
  EXPECT_THROW(run_training(desk_config(), d.manifest, train, d.stream.test), InvalidArgument);
  train = d.stream.train;
  train.pop_back();
  EXPECT_THROW(run_training(desk_config(), d.manifest, train, d.stream.test), DimensionMismatch);
}

TEST(Oracle, RecursiveMatchesJointWithPseudoLabels) {
  for (std::uint64_t seed : {11, 12, 13}) {
    const auto d = desk_stream(4, seed);
    auto c = desk_config();
    c.transform = ScoreTransform::identity;
    c.eta = 0.3;
    const auto diff = run_oracle_compare(c, d.manifest, d.stream.train);
    EXPECT_GT(diff.pseudo_labels, 0);
    EXPECT_LE(diff.relative_frobenius, 1e-8);
    EXPECT_EQ(diff.per_column_max_abs.size(), 8u);
  }
}

TEST(Oracle, UnweightedWithoutPseudoLabels) {
  const auto d = desk_stream(4, 14);
  auto c = desk_config();
  c.weighting = WeightingMode::none;
  c.eta = 0.999999;
  const auto diff = run_oracle_compare(c, d.manifest, d.stream.train);
  EXPECT_EQ(diff.pseudo_labels, 0);
  EXPECT_LE(diff.relative_frobenius, 1e-10);
}

TEST(Oracle, EmptyMiddlePhase) {
  auto d = desk_stream(4, 15);
  auto& mid = d.stream.train[1];
  mid.features.resize(0, 16);
  mid.labels.resize(0, 2);
  mid.sample_ids.clear();
  auto c = desk_config();
  c.transform = ScoreTransform::identity;
  c.eta = 0.3;
  const auto diff = run_oracle_compare(c, d.manifest, d.stream.train);
  EXPECT_LE(diff.relative_frobenius, 1e-8);
  // the skipped classes keep all-zero columns
  EXPECT_EQ(diff.recursive.col(2).cwiseAbs().maxCoeff() +
                diff.recursive.col(3).cwiseAbs().maxCoeff(),
            0.0);
}

TEST(Oracle, RefusesInfeasibleScale) {
  const auto d = desk_stream(2, 16);
  auto c = desk_config();
  c.buffer_size = 10000;
  EXPECT_THROW(run_oracle_compare(c, d.manifest, d.stream.train), InfeasibleScale);
}

TEST(Reports, EmbedConfigAndArrays) {
  const auto d = desk_stream(2, 17);
  const auto c = desk_config();
  const auto r = run_training(c, d.manifest, d.stream.train, d.stream.test);
  const auto j = to_json(r.report, c);
  EXPECT_EQ(config_from_json(j.at("config")), c);
  EXPECT_EQ(j.at("mAP").size(), 2u);
  EXPECT_EQ(j.at("phase_ids"), nlohmann::json({1, 2}));
  EXPECT_DOUBLE_EQ(j.at("last_mAP").get<double>(), r.report.phases[1].map);
}

}  // namespace
}  // namespace l3a
