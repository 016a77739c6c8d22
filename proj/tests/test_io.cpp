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

#include <filesystem>
#include <fstream>
#include <random>

#include "l3a/io.hpp"
#include "oracles.hpp"

namespace l3a {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("l3a_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write_raw(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
  }

  FormatErrc error_of(const fs::path& p, std::optional<std::uint32_t> dim = std::nullopt) {
    try {
      load_features(p, dim);
    } catch (const FormatError& e) {
      return e.code();
    }
    ADD_FAILURE() << "no error";
    return FormatErrc::io;
  }

  fs::path dir_;
};

TEST_F(IoTest, FeatureRoundTripAtFloatPrecision) {
  std::mt19937_64 rng(1);
  const Matrix m = oracle::random_matrix(rng, 3, 5, -10, 10);
  save_features(m, dir_ / "a.feat");
  const Matrix back = load_features(dir_ / "a.feat");
  ASSERT_EQ(back.rows(), 3);
  ASSERT_EQ(back.cols(), 5);
  EXPECT_TRUE(back == m.cast<float>().cast<double>());
}

TEST_F(IoTest, EmptyMatrixRoundTrips) {
  save_features(Matrix(0, 4), dir_ / "e.feat");
  const Matrix back = load_features(dir_ / "e.feat", 4);
  EXPECT_EQ(back.rows(), 0);
  EXPECT_EQ(back.cols(), 4);
}

TEST_F(IoTest, FeatureHeaderLayout) {
  save_features(Matrix::Constant(1, 1, 1.0), dir_ / "h.feat");
  std::ifstream in(dir_ / "h.feat", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ASSERT_EQ(bytes.size(), 20u);
  EXPECT_EQ(bytes.substr(0, 4), "L3AF");
  EXPECT_EQ(bytes[4], 1);  // version, little-endian
  EXPECT_EQ(bytes[8], 1);  // rows
  EXPECT_EQ(bytes[12], 1); // dim
  // 1.0f = 0x3F800000
  EXPECT_EQ(static_cast<unsigned char>(bytes[19]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(bytes[18]), 0x80);
}

TEST_F(IoTest, DistinctFeatureErrors) {
  save_features(Matrix::Ones(10, 2), dir_ / "ok.feat");
  std::ifstream in(dir_ / "ok.feat", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::string bad = bytes;
  bad.replace(0, 4, "XXXX");
  write_raw(dir_ / "magic.feat", bad);
  EXPECT_EQ(error_of(dir_ / "magic.feat"), FormatErrc::bad_magic);

  bad = bytes;
  bad[4] = 2;
  write_raw(dir_ / "version.feat", bad);
  EXPECT_EQ(error_of(dir_ / "version.feat"), FormatErrc::version_mismatch);

  // header says 10 rows, payload holds 9
  write_raw(dir_ / "short.feat", bytes.substr(0, bytes.size() - 8));
  EXPECT_EQ(error_of(dir_ / "short.feat"), FormatErrc::truncated_payload);

  EXPECT_EQ(error_of(dir_ / "ok.feat", 3), FormatErrc::dimension_mismatch);

  bad = bytes;
  bad.replace(0, 4, "L3AM");
  write_raw(dir_ / "kind.feat", bad);
  EXPECT_EQ(error_of(dir_ / "kind.feat"), FormatErrc::wrong_file_kind);

  EXPECT_EQ(error_of(dir_ / "missing.feat"), FormatErrc::io);
}

TEST_F(IoTest, LabelRoundTripAndValidation) {
  const PhaseManifest m(4, 2, {{1, {0, 1}}, {2, {2, 3}}});
  const std::vector<LabelRecord> recs{{5, {0, 3}}, {6, {}}, {7, {2}}};
  save_labels(recs, dir_ / "l.jsonl");
  EXPECT_EQ(load_labels(dir_ / "l.jsonl", m), recs);

  write_raw(dir_ / "range.jsonl", "{\"id\": 1, \"labels\": [4]}\n");
  try {
    load_labels(dir_ / "range.jsonl", m);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), FormatErrc::dimension_mismatch);
  }
  write_raw(dir_ / "junk.jsonl", "{\"id\": 1, \"labels\": [0]}\nnot json\n");
  try {
    load_labels(dir_ / "junk.jsonl", m);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), FormatErrc::malformed_record);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
  }
}

TEST_F(IoTest, MultiHotUsesColumnOrder) {
  const std::vector<LabelRecord> recs{{0, {3, 1}}, {1, {1}}};
  const std::vector<ClassId> cols{3, 1};
  const Matrix y = multi_hot(recs, cols);
  EXPECT_EQ(y(0, 0), 1.0);
  EXPECT_EQ(y(0, 1), 1.0);
  EXPECT_EQ(y(1, 0), 0.0);
  const std::vector<ClassId> narrow{1};
  EXPECT_THROW(multi_hot(recs, narrow), FormatError);
  EXPECT_EQ(multi_hot(recs, narrow, true).sum(), 2.0);
}

TEST_F(IoTest, ManifestRoundTrip) {
  const PhaseManifest m(5, 3, {{1, {4, 0}}, {2, {1, 2, 3}}});
  save_manifest(m, dir_ / "m.json");
  EXPECT_TRUE(load_manifest(dir_ / "m.json") == m);
  write_raw(dir_ / "bad.json", R"({"num_classes": 2, "feature_dim": 1,
      "phases": [{"id": 1, "classes": [0]}, {"id": 2, "classes": [0]}]})");
  EXPECT_THROW(load_manifest(dir_ / "bad.json"), InvalidArgument);
  write_raw(dir_ / "missing.json", R"({"num_classes": 2})");
  EXPECT_THROW(load_manifest(dir_ / "missing.json"), FormatError);
}

TEST_F(IoTest, StreamDirectoryRoundTrip) {
  const auto m = PhaseManifest::even_split(6, 4, 3);
  SyntheticSpec s;
  s.num_classes = 6;
  s.feature_dim = 4;
  s.samples_per_phase = 30;
  s.cooccurrence_strength = 0.5;
  s.seed = 11;
  const auto stream = generate_synthetic(s, m);
  save_stream(dir_, m, stream.train, stream.test);
  const auto m2 = load_manifest(dir_ / "manifest.json");
  const auto train = load_splits(dir_, m2, false);
  const auto test = load_splits(dir_, m2, true);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_TRUE(train[t].features == stream.train[t].features);
    EXPECT_TRUE(train[t].labels == stream.train[t].labels);
    EXPECT_EQ(train[t].sample_ids, stream.train[t].sample_ids);
    EXPECT_TRUE(test[t].labels == stream.test[t].labels);
    EXPECT_TRUE(test[t].full_labels);
  }
}

TEST_F(IoTest, TrainingSplitRejectsForeignLabels) {
  const PhaseManifest m(2, 1, {{1, {0}}, {2, {1}}});
  save_features(Matrix::Zero(1, 1), split_path(dir_, false, 1, ".feat"));
  write_raw(split_path(dir_, false, 1, ".jsonl"), "{\"id\": 0, \"labels\": [0, 1]}\n");
  EXPECT_THROW(load_split(dir_, m, false, 1), FormatError);
}

}  // namespace
}  // namespace l3a
