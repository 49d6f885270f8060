/*
 * Copyright (c) 2026 The VSA Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>

namespace vsa {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent seed from a base seed and up to two counters. All
/// randomness in the pipeline is keyed this way (never by scheduling order),
/// so results do not depend on which worker produced them.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(base) ^ stream) ^ (index * 0xD1B54A32D192ED03ULL));
}

inline Rng make_rng(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0) {
  return Rng(derive_seed(base, stream, index));
}

/// Normal(0, stddev) resampled until it falls within two standard deviations.
inline double truncated_normal(Rng& rng, double stddev) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    const double z = normal(rng);
    if (z >= -2.0 && z <= 2.0) return z * stddev;
  }
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace vsa
