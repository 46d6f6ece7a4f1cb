// Copyright 2026 The RepStrat Authors
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

#include <cstdint>
#include <limits>
#include <random>

namespace repstrat {

// Seeding scheme, version 1. Do not change without bumping kRandomSchemeVersion:
// shared sample files are replayed from (seed, stratum ordinal).
//   substream seed = splitmix64(seed + splitmix64(key))
//   generator      = std::mt19937_64 (sequence fixed by the C++ standard)
//   bounded draws  = rejection sampling on raw 64-bit outputs
inline constexpr int kRandomSchemeVersion = 1;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t key) {
  return splitmix64(seed + splitmix64(key));
}

using Generator = std::mt19937_64;

inline Generator make_generator(std::uint64_t seed, std::uint64_t key) {
  return Generator(substream_seed(seed, key));
}

// Uniform integer in [0, bound). std::uniform_int_distribution is
// implementation-defined, so draws are done by hand to stay replayable.
inline std::uint64_t uniform_below(Generator& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Generator& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace repstrat
