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

#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "l3a/data_model.hpp"
#include "l3a/error.hpp"
#include "l3a/rng.hpp"

namespace l3a {

struct BufferDescriptor {
  std::uint32_t input_dim = 0;
  std::uint32_t buffer_dim = 0;
  std::uint64_t seed = 0;

  bool operator==(const BufferDescriptor&) const = default;
};

// Frozen random projection followed by ReLU, lifting d_in features to
// d_buf dimensions.
//
// The projection is never stored: entries are standard normals from
// Xoshiro256(seed) drawn in row-major order (d_in rows, d_buf columns),
// each scaled by 1/sqrt(d_in).
class BufferLayer {
 public:
  BufferLayer(std::uint32_t input_dim, std::uint32_t buffer_dim, std::uint64_t seed)
      : descriptor_{input_dim, buffer_dim, seed} {
    if (input_dim < 1 || buffer_dim < 1) {
      throw InvalidArgument("buffer layer: dimensions must be >= 1");
    }
    Xoshiro256 rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
    projection_.resize(input_dim, buffer_dim);
    for (Index i = 0; i < projection_.rows(); ++i) {
      for (Index j = 0; j < projection_.cols(); ++j) {
        projection_(i, j) = rng.normal() * scale;
      }
    }
  }

  explicit BufferLayer(const BufferDescriptor& d)
      : BufferLayer(d.input_dim, d.buffer_dim, d.seed) {}

  const BufferDescriptor& descriptor() const { return descriptor_; }
  std::uint32_t input_dim() const { return descriptor_.input_dim; }
  std::uint32_t buffer_dim() const { return descriptor_.buffer_dim; }
  const Matrix& projection() const { return projection_; }

  // max(0, features * W_rand)
  Matrix expand(const Matrix& features) const {
    if (features.cols() != projection_.rows()) {
      throw DimensionMismatch("expand: features have " +
                              std::to_string(features.cols()) +
                              " columns, buffer expects " +
                              std::to_string(projection_.rows()));
    }
    return (features * projection_).cwiseMax(0.0);
  }

 private:
  BufferDescriptor descriptor_;
  Matrix projection_;
};

inline BufferLayer init_buffer(std::uint32_t input_dim, std::uint32_t buffer_dim,
                               std::uint64_t seed) {
  return BufferLayer(input_dim, buffer_dim, seed);
}

}  // namespace l3a
