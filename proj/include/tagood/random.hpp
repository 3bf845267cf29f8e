/*
 * Copyright 2026 The tagood Authors.
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

#ifndef TAGOOD_RANDOM_HPP_
#define TAGOOD_RANDOM_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace tagood {

std::uint64_t SplitMix64(std::uint64_t x);
std::uint64_t Fnv1a64(std::string_view bytes);

// Per-stage seed: SplitMix64(root ^ Fnv1a64(stage)). Every stage that draws
// random numbers gets its own stream, so stages can be re-run in isolation.
std::uint64_t DeriveSeed(std::uint64_t root, std::string_view stage);

// Thin wrapper over std::mt19937_64. The engine's output sequence is fixed
// by the standard; the distribution code below is ours so sampled values are
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t Next() { return engine_(); }
  // Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t Below(std::uint64_t bound);
  // Uniform double in [0, 1) with 53 random bits.
  double Uniform();
  // Standard normal via Box-Muller.
  double Normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Partial Fisher-Yates over 0..population-1. Returns `count` distinct indices
// in draw order.
std::vector<std::size_t> SampleWithoutReplacement(std::size_t population, std::size_t count,
                                                  Rng& rng);

}  // namespace tagood

#endif  // TAGOOD_RANDOM_HPP_
