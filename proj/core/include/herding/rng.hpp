// Copyright 2026 The herding authors
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

#include <cmath>
#include <cstdint>
#include <numbers>

namespace herding::rng {

// Counter-based generation: every draw is a pure function of (key, counter),
// so sample paths are reproducible independently of evaluation order and of
// any parallel schedule. Mixing is the splitmix64 finalizer.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a child key from a parent key and a lane index.
inline std::uint64_t derive(std::uint64_t key, std::uint64_t lane) {
  return mix64(key + kGolden * (lane + 1));
}

inline std::uint64_t derive(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
  return derive(derive(key, a), b);
}

/// 64 uniform bits for a (key, counter) pair.
inline std::uint64_t bits(std::uint64_t key, std::uint64_t counter) {
  return mix64(mix64(key ^ (kGolden * counter)) + key);
}

/// Uniform double in (0, 1]; never returns 0, safe as a log argument.
inline double uniform_open0(std::uint64_t key, std::uint64_t counter) {
  return static_cast<double>((bits(key, counter) >> 11) + 1) * 0x1.0p-53;
}

/// Uniform double in [0, 1).
inline double uniform(std::uint64_t key, std::uint64_t counter) {
  return static_cast<double>(bits(key, counter) >> 11) * 0x1.0p-53;
}

struct NormalPair {
  double z0;
  double z1;
};

/// Two independent standard normals via Box-Muller from counters (2c, 2c+1).
inline NormalPair standard_normal_pair(std::uint64_t key, std::uint64_t counter) {
  const double u1 = uniform_open0(key, 2 * counter);
  const double u2 = uniform(key, 2 * counter + 1);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace herding::rng
