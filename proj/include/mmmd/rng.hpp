#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace mmmd {

/// Philox4x32-10 counter-based block function (Salmon et al.).
/// Maps a 128-bit counter and a 64-bit key to 128 random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Mixes a seed with a path of integer tags into a new 64-bit seed.
/// Used to derive independent streams such as (seed, grid-index, rep).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

/// A stream of random numbers addressed by (key, stream id). Two streams with
/// the same address produce identical output on every platform, since the
/// generator is a pure function of its counter.
class RandomStream {
 public:
  RandomStream(std::uint64_t key, std::uint64_t stream) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  /// Standard normal via the Box-Muller transform.
  double normal() noexcept;
  /// Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape) noexcept;
  double chi_squared(double df) noexcept { return 2.0 * gamma(0.5 * df); }

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mmmd
