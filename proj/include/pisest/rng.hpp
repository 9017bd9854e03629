// Copyright 2026 The pisest Authors
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

#ifndef PISEST_RNG_HPP
#define PISEST_RNG_HPP

#include <array>
#include <cstdint>

/**
 * \file
 * \brief Counter-based, splittable random number streams.
 *
 * Every stream is a Philox4x32-10 block cipher keyed by a 64-bit key and driven
 * by a block counter. Child streams are derived from a parent key and a tag, so a
 * stream for (seed, replication, time, particle) is obtained by a chain of
 * `split` calls and never depends on how many draws other streams made. That is
 * what keeps particle loops deterministic regardless of evaluation order.
 */

namespace pisest {

namespace detail {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31U);
}

/// Philox4x32 with 10 rounds.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) noexcept;

}  // namespace detail

/// Well-known stream tags used to derive independent substreams.
namespace stream_tag {
inline constexpr std::uint64_t kParticles = 0x5041'5254ULL;   // per-particle propagation
inline constexpr std::uint64_t kResample = 0x5245'534DULL;    // resampling draws
inline constexpr std::uint64_t kRenewal = 0x5245'4E57ULL;     // semi-online particle renewal
inline constexpr std::uint64_t kPerturb = 0x5350'5341ULL;     // SPSA directions
inline constexpr std::uint64_t kReplication = 0x5245'504CULL; // experiment replications
inline constexpr std::uint64_t kData = 0x4441'5441ULL;        // simulated data sets
inline constexpr std::uint64_t kOuter = 0x4F55'5445ULL;       // offline outer iterations
}  // namespace stream_tag

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) noexcept : key_{detail::mix64(seed ^ 0x6A09E667F3BCC908ULL)} {}

  /// Derives an independent child stream. The parent is not advanced.
  [[nodiscard]] RngStream split(std::uint64_t tag) const noexcept {
    return RngStream{Key{detail::mix64(key_ ^ detail::mix64(tag + 0x9E3779B97F4A7C15ULL))}};
  }

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11U) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept { return (static_cast<double>(next_u64() >> 11U) + 0.5) * 0x1.0p-53; }

  double normal() noexcept;
  double exponential() noexcept;

  /// +1 or -1 with probability 1/2 each.
  int rademacher() noexcept { return (next_u64() >> 63U) != 0U ? 1 : -1; }

  std::uint64_t poisson(double lambda) noexcept;

 private:
  struct Key {
    std::uint64_t value;
  };
  explicit RngStream(Key key) noexcept : key_{key.value} {}

  std::uint64_t key_;
  std::uint64_t block_ = 0;
  std::uint64_t buffered_ = 0;
  bool has_buffered_ = false;
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

}  // namespace pisest

#endif  // PISEST_RNG_HPP
