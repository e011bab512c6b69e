// Copyright 2026 The QRC Measurement Authors
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

// Counter-based random streams.
//
// Every random quantity in the library is drawn from a Philox4x32-10 stream
// (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3"). A stream is
// identified by a 64-bit key (the user-visible seed) and a 64-bit stream id;
// the remaining 64 bits of the counter enumerate output blocks. Stream ids
// are derived with `stream_id(tag, a, b)` so that, e.g., trajectory
// realization 17 of the y-axis ensemble always consumes the same numbers no
// matter how work is split across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace qrc {

/// Purpose tag occupying the top byte of a stream id.
enum class StreamTag : std::uint8_t {
  couplings = 1,
  stm_inputs = 2,
  surrogate_noise = 3,
  trajectory = 4,
  literal_sampling = 5,
  validation = 6,
  synthetic_series = 7,
  seed_derivation = 8,
  test = 0xEE,
};

/// stream = tag << 56 | (a & 0xFF) << 48 | (b & 0xFFFF'FFFF'FFFF)
constexpr std::uint64_t stream_id(StreamTag tag, std::uint64_t a = 0,
                                  std::uint64_t b = 0) noexcept {
  return (static_cast<std::uint64_t>(tag) << 56) | ((a & 0xFFu) << 48) |
         (b & 0xFFFF'FFFF'FFFFull);
}

/// The bare Philox4x32-10 bijection.
struct Philox4x32Block {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter apply(Counter ctr, Key key) noexcept {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

/// Sequential view of one Philox stream.
///
/// Satisfies UniformRandomBitGenerator (32-bit words). Block `n` of stream
/// `s` under seed `k` is Philox(counter = {n_lo, n_hi, s_lo, s_hi},
/// key = {k_lo, k_hi}); words are consumed in order 0..3.
class Rng {
 public:
  using result_type = std::uint32_t;

  Rng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  /// Two consecutive words, first word in the low half.
  std::uint64_t next_u64() noexcept {
    const std::uint64_t lo = (*this)();
    const std::uint64_t hi = (*this)();
    return lo | (hi << 32);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1].
  double uniform_open_low() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second variate of each pair is
  /// cached and returned by the next call.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open_low();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) noexcept {
    return mean + stddev * normal();
  }

  std::uint64_t blocks_consumed() const noexcept { return block_; }

 private:
  void refill() noexcept {
    const Philox4x32Block::Counter ctr{
        static_cast<std::uint32_t>(block_),
        static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32)};
    buffer_ = Philox4x32Block::apply(ctr, key_);
    ++block_;
    pos_ = 0;
  }

  Philox4x32Block::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32Block::Counter buffer_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Child seed for sub-run `index` of `base` (first output word pair of
/// stream seed_derivation / index).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  Rng rng(base, stream_id(StreamTag::seed_derivation, 0, index));
  return rng.next_u64();
}

}  // namespace qrc
