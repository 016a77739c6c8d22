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

// Model checkpoints (little-endian):
//
//   "L3AM" | u32 version = 1 | f64 gamma | u32 phase | u32 d_in | u32 d_buf |
//   u64 buffer seed | u32 K | K x u64 freq | d_buf^2 x f64 R |
//   d_buf*K x f64 W, matrices row-major.
//
// All payloads are 64-bit, so a round trip is bit-exact.

#pragma once

#include <filesystem>
#include <string>

#include "l3a/error.hpp"
#include "l3a/io.hpp"
#include "l3a/wac.hpp"

namespace l3a {

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
  const Index d = state.buffer_dim();
  const Index K = state.num_classes();
  if (state.weights.rows() != d || static_cast<Index>(state.freq.size()) != K ||
      static_cast<Index>(state.buffer.buffer_dim) != d) {
    throw DimensionMismatch("save_checkpoint: inconsistent model state");
  }
  io_detail::ByteWriter w;
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.f64(state.gamma);
  w.u32(state.phase);
  w.u32(state.buffer.input_dim);
  w.u32(state.buffer.buffer_dim);
  w.u64(state.buffer.seed);
  w.u32(static_cast<std::uint32_t>(K));
  for (std::uint64_t c : state.freq.counts) w.u64(c);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) w.f64(state.autocorrelation(i, j));
  }
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < K; ++j) w.f64(state.weights(i, j));
  }
  w.write_to(path);
}

inline ModelState load_checkpoint(const std::filesystem::path& path) {
  auto r = io_detail::ByteReader::from_file(path);
  const std::string magic = r.magic();
  if (magic == kFeatureMagic) {
    throw FormatError(FormatErrc::wrong_file_kind,
                      path.string() + " is a feature file, not a checkpoint");
  }
  if (magic != kCheckpointMagic) throw FormatError(FormatErrc::bad_magic, path.string());
  const std::uint32_t version = r.u32("header");
  if (version != kCheckpointVersion) {
    throw FormatError(FormatErrc::version_mismatch,
                      path.string() + ": version " + std::to_string(version));
  }
  ModelState s;
  s.gamma = r.f64("header");
  s.phase = r.u32("header");
  s.buffer.input_dim = r.u32("header");
  s.buffer.buffer_dim = r.u32("header");
  s.buffer.seed = r.u64("header");
  const std::uint32_t K = r.u32("header");
  if (s.buffer.buffer_dim == 0 || !(s.gamma > 0.0)) {
    throw FormatError(FormatErrc::dimension_mismatch,
                      path.string() + ": header has d_buf = 0 or gamma <= 0");
  }
  const Index d = s.buffer.buffer_dim;
  const std::uint64_t payload =
      8ULL * (K + static_cast<std::uint64_t>(d) * d + static_cast<std::uint64_t>(d) * K);
  r.need(payload, "payload");
  if (r.remaining() != payload) {
    throw FormatError(FormatErrc::dimension_mismatch,
                      path.string() + ": payload size disagrees with header dimensions");
  }
  s.freq.counts.resize(K);
  for (auto& c : s.freq.counts) c = r.u64("frequencies");
  s.autocorrelation.resize(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) s.autocorrelation(i, j) = r.f64("R");
  }
  s.weights.resize(d, K);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < static_cast<Index>(K); ++j) s.weights(i, j) = r.f64("W");
  }
  return s;
}

}  // namespace l3a
