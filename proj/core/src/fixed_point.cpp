#include "nope/fixed_point.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace nope::fxp {

namespace {

using int128 = __int128;

std::int64_t clamp_raw(int128 raw, const QFormat& fmt, Overflow overflow, bool& sticky) {
  const int128 lo = fmt.min_raw();
  const int128 hi = fmt.max_raw();
  if (raw >= lo && raw <= hi) return std::int64_t(raw);
  if (overflow == Overflow::Saturate) {
    sticky = true;
    return raw < lo ? std::int64_t(lo) : std::int64_t(hi);
  }
  // Two's-complement wrap into the format width.
  const int w = fmt.width();
  const std::uint64_t mask = w >= 64 ? ~std::uint64_t(0) : ((std::uint64_t(1) << w) - 1);
  std::uint64_t bits = std::uint64_t(raw) & mask;
  if (fmt.is_signed && w < 64 && (bits >> (w - 1)) != 0) bits |= ~mask;  // sign-extend
  return std::int64_t(bits);
}

// Arithmetic right shift with floor semantics (two's-complement truncation).
inline int128 floor_shift(int128 v, int shift) {
  if (shift <= 0) return v << -shift;
  return v >> shift;
}

// Right shift with round-nearest-even, used where values cross a format
// boundary rather than inside an accumulation.
inline int128 round_shift(int128 v, int shift) {
  if (shift <= 0) return v << -shift;
  const int128 half = int128(1) << (shift - 1);
  int128 q = v >> shift;
  const int128 rem = v - (q << shift);
  if (rem > half || (rem == half && (q & 1))) ++q;
  return q;
}

inline int msb_index(std::uint64_t v) {
  int i = -1;
  while (v) {
    v >>= 1;
    ++i;
  }
  return i;
}

// Seed table for 1/m on m in [1, 2), 10 fraction bits, midpoint per bucket.
const std::array<std::int64_t, 32>& recip_lut() {
  static const std::array<std::int64_t, 32> lut = [] {
    std::array<std::int64_t, 32> t{};
    for (int i = 0; i < 32; ++i) {
      const double mid = 1.0 + (i + 0.5) / 32.0;
      t[size_t(i)] = std::llround(1024.0 / mid);
    }
    return t;
  }();
  return lut;
}

constexpr int kNrFrac = 24;  // fraction bits of the Newton-Raphson intermediates

// 1/w at kNrFrac fraction bits for w > 0 given as (raw, frac); exact when w
// is a power of two.
std::int64_t recip_core(std::int64_t w_raw, int w_frac) {
  const int p = msb_index(std::uint64_t(w_raw));
  // Mantissa m in [1, 2) at kNrFrac fraction bits.
  std::int64_t m_raw = p <= kNrFrac ? (w_raw << (kNrFrac - p)) : (w_raw >> (p - kNrFrac));
  const int exp = p - w_frac;  // w = m * 2^exp

  std::int64_t r1;  // ~1/m at kNrFrac fraction bits
  if (m_raw == (std::int64_t(1) << kNrFrac)) {
    r1 = std::int64_t(1) << kNrFrac;  // exact power of two
  } else {
    const std::int64_t r0 = recip_lut()[size_t((m_raw >> (kNrFrac - 5)) & 31)];  // 10 frac bits
    const std::int64_t t = (m_raw * r0) >> 10;                     // m*r0 at kNrFrac
    const std::int64_t d = (std::int64_t(2) << kNrFrac) - t;       // 2 - m*r0
    r1 = (r0 * d) >> 10;                                           // r0*(2 - m*r0)
  }
  // 1/w = (1/m) * 2^-exp.
  return std::int64_t(floor_shift(r1, exp));
}

}  // namespace

double QFormat::lsb() const { return std::ldexp(1.0, -frac_bits); }

std::string to_string(const QFormat& fmt) {
  return (fmt.is_signed ? "s" : "u") + std::to_string(fmt.int_bits) + "." +
         std::to_string(fmt.frac_bits);
}

QFormat qformat_from_string(const std::string& token) {
  if (token.size() < 4 || (token[0] != 's' && token[0] != 'u'))
    throw std::invalid_argument("bad format token: " + token);
  const auto dot = token.find('.');
  if (dot == std::string::npos) throw std::invalid_argument("bad format token: " + token);
  QFormat fmt;
  fmt.is_signed = token[0] == 's';
  fmt.int_bits = std::stoi(token.substr(1, dot - 1));
  fmt.frac_bits = std::stoi(token.substr(dot + 1));
  if (fmt.int_bits < 0 || fmt.frac_bits < 0 || fmt.width() > 64)
    throw std::invalid_argument("bad format token: " + token);
  return fmt;
}

QValue::QValue(std::int64_t raw, QFormat fmt) : raw_(raw), fmt_(fmt) {
  if (fmt.int_bits < 0 || fmt.frac_bits < 0 || fmt.width() > 64)
    throw std::invalid_argument("QValue: invalid format");
  if (raw < fmt.min_raw() || raw > fmt.max_raw())
    throw std::invalid_argument("QValue: raw payload not representable in format");
}

double QValue::to_double() const { return std::ldexp(double(raw_), -fmt_.frac_bits); }

QValue quantize(double x, QFormat fmt, Rounding mode, Overflow overflow) {
  bool ignored = false;
  if (std::isnan(x)) return QValue(0, fmt);
  double scaled = std::ldexp(x, fmt.frac_bits);
  // Clamp far outside any representable range before the integer conversion;
  // saturation (or wrap of a saturated payload) handles the rest.
  constexpr double kHuge = 4.0e18;
  if (scaled > kHuge) scaled = kHuge;
  if (scaled < -kHuge) scaled = -kHuge;
  int128 raw;
  if (mode == Rounding::Truncate) {
    raw = int128(std::floor(scaled));
  } else {
    const double f = std::floor(scaled);
    const double frac = scaled - f;
    raw = int128(f);
    if (frac > 0.5) {
      raw += 1;
    } else if (frac == 0.5 && (std::int64_t(f) & 1) != 0) {
      raw += 1;  // tie to even
    }
  }
  return QValue(clamp_raw(raw, fmt, overflow, ignored), fmt);
}

QComplex quantize_complex(double re, double im, QFormat fmt, Rounding mode, Overflow overflow) {
  return {quantize(re, fmt, mode, overflow), quantize(im, fmt, mode, overflow)};
}

QValue mul_to(const QValue& a, const QValue& b, QFormat out, bool& sticky) {
  const int128 prod = int128(a.raw()) * int128(b.raw());
  const int drop = a.fmt().frac_bits + b.fmt().frac_bits - out.frac_bits;
  const int128 shifted = round_shift(prod, drop);
  return QValue(clamp_raw(shifted, out, Overflow::Saturate, sticky), out);
}

QValue add_to(const QValue& a, const QValue& b, QFormat out, bool& sticky) {
  const int frac = std::max({a.fmt().frac_bits, b.fmt().frac_bits, out.frac_bits});
  const int128 sum = (int128(a.raw()) << (frac - a.fmt().frac_bits)) +
                     (int128(b.raw()) << (frac - b.fmt().frac_bits));
  const int128 shifted = round_shift(sum, frac - out.frac_bits);
  return QValue(clamp_raw(shifted, out, Overflow::Saturate, sticky), out);
}

QValue negate(const QValue& a, bool& sticky) {
  return QValue(clamp_raw(-int128(a.raw()), a.fmt(), Overflow::Saturate, sticky), a.fmt());
}

QValue convert(const QValue& a, QFormat out, bool& sticky) {
  const int128 shifted = round_shift(int128(a.raw()), a.fmt().frac_bits - out.frac_bits);
  return QValue(clamp_raw(shifted, out, Overflow::Saturate, sticky), out);
}

CAcc mac(const CAcc& acc, const QComplex& a, const QComplex& b, bool conj_a, bool& sticky) {
  const std::int64_t a_im = conj_a ? -a.im.raw() : a.im.raw();
  const int prod_frac = a.re.fmt().frac_bits + b.re.fmt().frac_bits;
  const int128 p_re = int128(a.re.raw()) * b.re.raw() - int128(a_im) * b.im.raw();
  const int128 p_im = int128(a.re.raw()) * b.im.raw() + int128(a_im) * b.re.raw();

  const QFormat out = acc.re.fmt();
  const int drop = prod_frac - out.frac_bits;
  const int128 re = int128(acc.re.raw()) + floor_shift(p_re, drop);
  const int128 im = int128(acc.im.raw()) + floor_shift(p_im, drop);
  return {QValue(clamp_raw(re, out, Overflow::Saturate, sticky), out),
          QValue(clamp_raw(im, out, Overflow::Saturate, sticky), out)};
}

QValue reciprocal_1px(const QValue& x, QFormat out) {
  if (x.raw() < 0) throw std::invalid_argument("reciprocal_1px: x must be nonnegative");
  const int frac = x.fmt().frac_bits;
  const std::int64_t w_raw = x.raw() + (std::int64_t(1) << frac);  // 1 + x

  const std::int64_t rw = recip_core(w_raw, frac);  // 1/(1+x) at kNrFrac
  std::int64_t res = (std::int64_t(1) << kNrFrac) - rw;
  res = std::int64_t(floor_shift(res, kNrFrac - out.frac_bits));
  if (res < 0) res = 0;
  const std::int64_t one = std::int64_t(1) << out.frac_bits;
  if (res >= one) res = one - 1;  // clamp to 1 - ulp
  return QValue(res, out);
}

QValue reciprocal_pos(const QValue& x, QFormat out, bool& sticky) {
  if (x.raw() <= 0) throw std::invalid_argument("reciprocal_pos: x must be positive");
  const std::int64_t rw = recip_core(x.raw(), x.fmt().frac_bits);
  const int128 shifted = floor_shift(int128(rw), kNrFrac - out.frac_bits);
  return QValue(clamp_raw(shifted, out, Overflow::Saturate, sticky), out);
}

}  // namespace nope::fxp
