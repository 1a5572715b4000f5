// SPDX-License-Identifier: Apache-2.0
//
// uavmimo: system-level simulator for cellular-connected UAVs with massive MIMO
// Copyright (C) 2026 The uavmimo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef UAVMIMO_RANDOM_HPP
#define UAVMIMO_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

#include <boost/random/normal_distribution.hpp>

#include "uavmimo/core.hpp"

namespace uavmimo {

using Rng = std::mt19937_64;

/// Purpose tags keep independent substreams apart even when the other
/// key components coincide.
enum class StreamTag : std::uint64_t {
  kDrop = 1,
  kLargeScale = 2,
  kSchedule = 3,
  kFullChannel = 4,
  kSuChannel = 5,
  kProjection = 6,
  kSilentPhase = 7,
  kEstimationNoise = 8,
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Order-sensitive hash of a key tuple into a 64-bit engine seed.
inline std::uint64_t stream_seed(std::uint64_t master_seed, StreamTag tag,
                                 std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = detail::mix64(master_seed ^ 0x5851f42d4c957f2dULL);
  h = detail::mix64(h ^ static_cast<std::uint64_t>(tag));
  for (std::uint64_t p : parts) h = detail::mix64(h ^ (p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t master_seed, StreamTag tag,
                       std::initializer_list<std::uint64_t> parts) {
  return Rng(stream_seed(master_seed, tag, parts));
}

/// Circularly-symmetric complex Gaussian sampler, CN(0, 1) per draw.
class ComplexGaussian {
 public:
  cplx operator()(Rng& rng) {
    const double re = normal_(rng);
    return {re, normal_(rng)};
  }

  void fill(Rng& rng, cplx* out, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) out[i] = (*this)(rng);
  }

 private:
  boost::random::normal_distribution<double> normal_{0.0, std::numbers::sqrt2 / 2.0};  // ziggurat
};

inline double uniform_phase(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(rng);
}

}  // namespace uavmimo

#endif  // UAVMIMO_RANDOM_HPP
