// Copyright 2026 The Wellsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace wellsense {

/// Seedable random source. Every stochastic operation takes one of these
/// explicitly so a whole experiment is reproducible from a single seed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Independent child stream keyed by `key`; deterministic in (seed, key)
  /// and unaffected by how much the parent has been consumed.
  RandomStream split(std::uint64_t key) const { return RandomStream(mix(seed_ ^ mix(key + 0x9e3779b97f4a7c15ULL))); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(engine_); }

  double normal(double mean, double stddev) { return mean + stddev * normal_(engine_); }

  /// Index drawn with probability `probs[j]` by cumulative inversion.
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
      acc += probs[j];
      if (u < acc) return j;
    }
    // u landed in the rounding gap above the cumulative sum
    for (std::size_t j = probs.size(); j-- > 0;)
      if (probs[j] > 0.0) return j;
    return probs.size() - 1;
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace wellsense
