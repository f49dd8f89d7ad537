// Copyright 2026 The MergeSched Authors.
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

namespace mergesched {

__extension__ using uint128_t = unsigned __int128;

// Counter-based randomness. A stream is identified by a 64-bit key and each
// draw by its position in the stream, so any element of any stream can be
// regenerated independently of evaluation order.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632BE59BD9B4E019ULL));
}

// Identifies the stochastic stream used for one encode call.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t worker = 0;
  std::uint64_t iteration = 0;
  std::uint64_t group = 0;

  constexpr std::uint64_t hash() const {
    return mix_key(mix_key(mix_key(splitmix64(seed), worker), iteration), group);
  }
};

class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return splitmix64(key_ ^ splitmix64(counter));
  }

  // Uniform in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound); bound > 0. Multiply-shift reduction.
  std::uint64_t below(std::uint64_t counter, std::uint64_t bound) const {
    return static_cast<std::uint64_t>(
        (static_cast<uint128_t>(bits(counter)) * bound) >> 64);
  }

 private:
  std::uint64_t key_;
};

// Sequential generator for data synthesis (profiles, datasets, test inputs).
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : rng_(splitmix64(seed)) {}

  std::uint64_t next() { return rng_.bits(counter_++); }
  double uniform() { return rng_.uniform(counter_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t bound) { return rng_.below(counter_++, bound); }
  // Standard normal via Box-Muller.
  double normal();

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace mergesched
