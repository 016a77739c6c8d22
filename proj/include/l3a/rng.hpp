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

// Pinned pseudo-random generation.
//
// The standard library distributions are implementation-defined, so anything
// that must reproduce across toolchains (buffer projections, synthetic data)
// goes through this header instead.
//
// Stream protocol:
//   - Engine: xoshiro256** (Blackman & Vigna), state seeded by four
//     consecutive splitmix64 outputs.
//   - A named stream (seed, tag) seeds splitmix64 with
//     seed + tag * 0x9E3779B97F4A7C15 (mod 2^64).
//   - uniform(): top 53 bits of one engine output, scaled by 2^-53, in [0, 1).
//   - normal(): Box-Muller on two consecutive uniforms u1, u2;
//     sqrt(-2 ln(1 - u1)) * cos(2 pi u2). One normal per two engine outputs,
//     nothing is cached.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace l3a {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  // Independent stream for one consumer of a shared seed.
  static Xoshiro256 stream(std::uint64_t seed, std::uint64_t tag) {
    return Xoshiro256(seed + tag * 0x9E3779B97F4A7C15ULL);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Index i drawn with probability proportional to the i-th weight, given
  // the running sums of the weights.
  std::size_t categorical(std::span<const double> cumulative_weights) {
    const double total = cumulative_weights.back();
    const double target = uniform() * total;
    for (std::size_t i = 0; i < cumulative_weights.size(); ++i) {
      if (target < cumulative_weights[i]) return i;
    }
    return cumulative_weights.size() - 1;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

}  // namespace l3a
