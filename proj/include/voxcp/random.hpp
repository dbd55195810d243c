/*
 * Copyright 2026 The voxcp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Reproducible random streams.
//
// All randomness in the library comes from SplitMix64 (Steele, Lea & Flood,
// 2014) so any implementation can reproduce the same streams:
//
//   state += 0x9e3779b97f4a7c15
//   z = state
//   z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//   z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//   return z ^ (z >> 31)
//
// Keyed sub-streams are seeded with Mix(seed ^ Mix(key)), which makes a
// voxel's or pixel's draws independent of evaluation order.
//
// Derived variates:
//   uniform [0,1)  (next >> 11) * 2^-53
//   uniform (0,1)  ((next >> 11) + 0.5) * 2^-53
//   normal         Box-Muller, cos branch only: sqrt(-2 ln u1) cos(2 pi u2)
//   gamma(a >= 1)  Marsaglia-Tsang; gamma(a < 1) = gamma(a + 1) * u^(1/a)

#ifndef VOXCP_RANDOM_HPP_
#define VOXCP_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace voxcp {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stateless hash of (seed, key) -> uniform [0, 1).
inline double HashUniform(std::uint64_t seed, std::uint64_t key) {
  return static_cast<double>(Mix64(seed ^ Mix64(key + kGolden)) >> 11) *
         0x1.0p-53;
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  // Independent stream for (seed, key).
  static SplitMix64 Keyed(std::uint64_t seed, std::uint64_t key) {
    return SplitMix64(Mix64(seed ^ Mix64(key + kGolden)));
  }

  std::uint64_t Next() {
    state_ += kGolden;
    return Mix64(state_);
  }

  double Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }
  double UniformOpen() {
    return (static_cast<double>(Next() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Integer in [lo, hi].
  std::int64_t UniformInt(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(Next() % span);
  }

  double Normal() {
    const double u1 = UniformOpen();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // log of a Gamma(shape, 1) draw; stays finite for tiny shapes where the
  // draw itself would underflow.
  double LogGamma(double shape) {
    if (shape < 1.0) {
      return LogGamma(shape + 1.0) + std::log(UniformOpen()) / shape;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x, v;
      do {
        x = Normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = UniformOpen();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return std::log(d) + std::log(v);
      }
    }
  }

  // Index drawn from a discrete distribution (weights need not sum to 1).
  std::size_t Categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = Uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
      if (weights[i] > 0.0) return i;
    }
    return 0;
  }

 private:
  std::uint64_t state_;
};

}  // namespace voxcp

#endif  // VOXCP_RANDOM_HPP_
