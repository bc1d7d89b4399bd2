#pragma once

#include <array>
#include <complex>
#include <cstdint>

namespace nope {

/// Counter-based random stream (Philox4x32-10).
///
/// A (seed, stream) pair names an independent, reproducible sequence and
/// construction is O(1), so Monte Carlo drivers can key one stream per trial
/// and evaluate trials from any worker thread without coordination.
class Philox {
public:
  using result_type = std::uint32_t;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }
  result_type operator()() noexcept;

  /// Uniform double in [0, 1) built from 53 random bits.
  double uniform() noexcept;

  /// Standard normal deviate (Box-Muller; the second value is cached).
  double gaussian() noexcept;

  /// Circularly-symmetric complex Gaussian with total variance `variance`
  /// (each of the real and imaginary parts has variance `variance / 2`).
  std::complex<double> cgaussian(double variance) noexcept;

  /// One raw 4x32 block; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key) noexcept;

private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int avail_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nope
