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

#include "l3a/checkpoint.hpp"
#include "oracles.hpp"

namespace l3a {
namespace {

namespace fs = std::filesystem;

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("l3a_ckpt_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::mt19937_64 rng(5);
    state_ = init_state(123.5, BufferDescriptor{7, 6, 0xDEADBEEFCAFEULL});
    state_.autocorrelation = oracle::random_matrix(rng, 6, 6);
    state_.weights = oracle::random_matrix(rng, 6, 3);
    state_.freq.counts = {1, 0, 1ULL << 40};
    state_.phase = 2;
  }
  void TearDown() override { fs::remove_all(dir_); }

  FormatErrc error_of(const fs::path& p) {
    try {
      load_checkpoint(p);
    } catch (const FormatError& e) {
      return e.code();
    }
    ADD_FAILURE() << "no error";
    return FormatErrc::io;
  }

  fs::path dir_;
  ModelState state_;
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
  save_checkpoint(state_, dir_ / "m.l3am");
  const ModelState back = load_checkpoint(dir_ / "m.l3am");
  EXPECT_EQ(back.gamma, state_.gamma);
  EXPECT_EQ(back.phase, 2u);
  EXPECT_EQ(back.buffer, state_.buffer);
  EXPECT_EQ(back.freq, state_.freq);
  EXPECT_TRUE(back.autocorrelation == state_.autocorrelation);
  EXPECT_TRUE(back.weights == state_.weights);
  save_checkpoint(back, dir_ / "again.l3am");
  EXPECT_EQ(read_all(dir_ / "m.l3am"), read_all(dir_ / "again.l3am"));
}

TEST_F(CheckpointTest, FreshStateRoundTrips) {
  const auto fresh = init_state(1000.0, BufferDescriptor{3, 4, 1});
  save_checkpoint(fresh, dir_ / "f.l3am");
  const auto back = load_checkpoint(dir_ / "f.l3am");
  EXPECT_EQ(back.num_classes(), 0);
  EXPECT_TRUE(back.autocorrelation == fresh.autocorrelation);
}

TEST_F(CheckpointTest, HeaderLayout) {
  save_checkpoint(state_, dir_ / "m.l3am");
  const std::string b = read_all(dir_ / "m.l3am");
  // magic, version, gamma, t, d_in, d_buf, seed, K, then K u64 + 36 + 18 f64
  ASSERT_EQ(b.size(), 4u + 4 + 8 + 4 + 4 + 4 + 8 + 4 + 8 * (3 + 36 + 18));
  EXPECT_EQ(b.substr(0, 4), "L3AM");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[16], 2);   // phase
  EXPECT_EQ(b[20], 7);   // d_in
  EXPECT_EQ(b[24], 6);   // d_buf
  EXPECT_EQ(static_cast<unsigned char>(b[28]), 0xFE);  // seed, low byte first
  EXPECT_EQ(b[36], 3);   // K
}

TEST_F(CheckpointTest, DistinctErrors) {
  save_checkpoint(state_, dir_ / "m.l3am");
  const std::string good = read_all(dir_ / "m.l3am");

  std::string bad = good;
  bad.replace(0, 4, "L3AF");
  write_all(dir_ / "kind", bad);
  EXPECT_EQ(error_of(dir_ / "kind"), FormatErrc::wrong_file_kind);

  bad = good;
  bad.replace(0, 4, "ZZZZ");
  write_all(dir_ / "magic", bad);
  EXPECT_EQ(error_of(dir_ / "magic"), FormatErrc::bad_magic);

  bad = good;
  bad[4] = 9;
  write_all(dir_ / "version", bad);
  EXPECT_EQ(error_of(dir_ / "version"), FormatErrc::version_mismatch);

  write_all(dir_ / "short", good.substr(0, good.size() - 1));
  EXPECT_EQ(error_of(dir_ / "short"), FormatErrc::truncated_payload);
  write_all(dir_ / "header", good.substr(0, 20));
  EXPECT_EQ(error_of(dir_ / "header"), FormatErrc::truncated_payload);

  write_all(dir_ / "long", good + std::string(8, '\0'));
  EXPECT_EQ(error_of(dir_ / "long"), FormatErrc::dimension_mismatch);
}

TEST_F(CheckpointTest, FeatureLoaderRejectsCheckpoints) {
  save_checkpoint(state_, dir_ / "m.l3am");
  try {
    load_features(dir_ / "m.l3am");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), FormatErrc::wrong_file_kind);
  }
}

}  // namespace
}  // namespace l3a
