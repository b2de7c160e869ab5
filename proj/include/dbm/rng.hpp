// SPDX-License-Identifier: Apache-2.0
//
// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// A stream is identified by (seed, index, stream id): the seed is the Philox
// key, index and stream id occupy the upper half of the 128-bit counter and
// the lower half counts blocks. Draws therefore depend only on the triple and
// the position inside the stream, never on thread scheduling.
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace dbm {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Ten-round Philox bijection.
PhiloxBlock philox4x32_10(PhiloxBlock counter, PhiloxKey key) noexcept;

class PhiloxStream {
 public:
  using result_type = std::uint32_t;

  PhiloxStream(std::uint64_t seed, std::uint32_t index, std::uint32_t stream_id) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;
  std::uint64_t next_u64() noexcept;

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept;
  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept;
  // Standard exponential.
  double exponential() noexcept;
  // Uniform integer in [0, n), n >= 1, by rejection.
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  void refill() noexcept;

  PhiloxKey key_{};
  PhiloxBlock counter_{};
  PhiloxBlock buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream ids used across the library, so that independent consumers never
// share draws for the same (seed, index).
enum class Stream : std::uint32_t {
  couplings = 1,
  fields = 2,
  mc_init = 3,
  mc_chain = 4,
  configurations = 5,
  starts = 6,
  simplex = 7,
};

inline PhiloxStream make_stream(std::uint64_t seed, std::uint32_t index, Stream id) noexcept {
  return PhiloxStream(seed, index, static_cast<std::uint32_t>(id));
}

}  // namespace dbm
