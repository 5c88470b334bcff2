// Copyright 2026 The penalty-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <vector>

namespace plab {

namespace detail {

// splitmix64 finalizer; used only to mix keys into stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Hashes an arbitrary key (base seed, sweep index, replicate, purpose, ...)
/// into one 64-bit stream seed. Streams keyed on disjoint tuples are
/// independent for practical purposes, so any subset of a sweep can be
/// recomputed without running the rest.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = 0x8f1bbcdcbfa53e0bull;
  for (std::uint64_t part : key) h = detail::mix64(h ^ part);
  return h;
}

/// Deterministic random stream. Wraps mt19937_64 but performs all floating
/// point and integer conversions itself, so draws do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Exact uniform integer in [0, n) by rejection. n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = eng_();
      if (x >= threshold) return x % n;
    }
  }

  /// Exponential draw with the given rate, by inversion.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  /// Uniform random permutation of {0, ..., n-1} (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
      std::swap(p[i - 1], p[static_cast<std::size_t>(below(i))]);
    }
    return p;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace plab
