#include "nope/rng.hpp"

#include <cmath>
#include <numbers>

namespace nope {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) noexcept {
  const std::uint64_t p0 = std::uint64_t(kMul0) * c[0];
  const std::uint64_t p1 = std::uint64_t(kMul1) * c[2];
  const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
  const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> Philox::block(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept {
  round_once(counter, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kWeyl0;
    key[1] += kWeyl1;
    round_once(counter, key);
  }
  return counter;
}

Philox::Philox(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
      stream_{std::uint32_t(stream), std::uint32_t(stream >> 32)} {}

void Philox::refill() noexcept {
  buf_ = block({std::uint32_t(block_index_), std::uint32_t(block_index_ >> 32),
                stream_[0], stream_[1]},
               key_);
  ++block_index_;
  avail_ = 4;
}

Philox::result_type Philox::operator()() noexcept {
  if (avail_ == 0) refill();
  return buf_[4 - avail_--];
}

double Philox::uniform() noexcept {
  const std::uint64_t hi = (*this)();
  const std::uint64_t lo = (*this)();
  return double(((hi << 32) | lo) >> 11) * 0x1.0p-53;
}

double Philox::gaussian() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 is shifted away from 0 so the log stays finite.
  const double u1 = uniform() + 0x1.0p-54;
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  spare_ = mag * std::sin(ang);
  has_spare_ = true;
  return mag * std::cos(ang);
}

std::complex<double> Philox::cgaussian(double variance) noexcept {
  const double s = std::sqrt(variance / 2.0);
  const double re = gaussian();
  const double im = gaussian();
  return {s * re, s * im};
}

}  // namespace nope
