#pragma once

#include <cstdint>
#include <string>

namespace nope::fxp {

enum class Rounding { NearestEven, Truncate };
enum class Overflow { Saturate, Wrap };

/// Two's-complement fixed-point format: optional sign bit, int_bits integer
/// bits, frac_bits fraction bits. Total width is at most 64.
struct QFormat {
  int int_bits = 0;
  int frac_bits = 0;
  bool is_signed = true;

  int width() const { return (is_signed ? 1 : 0) + int_bits + frac_bits; }
  std::int64_t max_raw() const { return (std::int64_t(1) << (int_bits + frac_bits)) - 1; }
  std::int64_t min_raw() const {
    return is_signed ? -(std::int64_t(1) << (int_bits + frac_bits)) : 0;
  }
  double lsb() const;

  bool operator==(const QFormat&) const = default;
};

/// Format token used by golden-vector files: 's' or 'u', then
/// "<int_bits>.<frac_bits>", e.g. "s6.10".
std::string to_string(const QFormat& fmt);
QFormat qformat_from_string(const std::string& token);

/// A quantized value: raw two's-complement payload plus its format.
/// Real value = raw * 2^-frac_bits.
class QValue {
public:
  QValue() = default;
  QValue(std::int64_t raw, QFormat fmt);  // validates representability

  std::int64_t raw() const { return raw_; }
  const QFormat& fmt() const { return fmt_; }
  double to_double() const;

  static QValue zero(QFormat fmt) { return QValue(0, fmt); }

  bool operator==(const QValue&) const = default;

private:
  std::int64_t raw_ = 0;
  QFormat fmt_{};
};

/// Nearest representable value per the rounding mode; range violations are
/// absorbed by saturation or two's-complement wrap.
QValue quantize(double x, QFormat fmt, Rounding mode = Rounding::NearestEven,
                Overflow overflow = Overflow::Saturate);

struct QComplex {
  QValue re, im;
  bool operator==(const QComplex&) const = default;
};

QComplex quantize_complex(double re, double im, QFormat fmt,
                          Rounding mode = Rounding::NearestEven,
                          Overflow overflow = Overflow::Saturate);

/// Full-precision product delivered into `out` with round-nearest-even at
/// the format boundary; saturation is recorded in the sticky flag instead of
/// raised.
QValue mul_to(const QValue& a, const QValue& b, QFormat out, bool& sticky);

/// Format-aligned saturating addition into `out` (exact alignment,
/// nearest-even when out has fewer fraction bits than the wider operand).
QValue add_to(const QValue& a, const QValue& b, QFormat out, bool& sticky);

QValue negate(const QValue& a, bool& sticky);

/// Format conversion: round-nearest-even on dropped fraction bits,
/// saturation into the target range.
QValue convert(const QValue& a, QFormat out, bool& sticky);

/// Complex multiply-accumulate: both partial products are formed at full
/// precision and combined exactly; the single truncation happens when the
/// complex product enters the accumulator format. Accumulator saturation
/// sets the sticky flag. With conj_a the accumulated product is conj(a)*b.
struct CAcc {
  QValue re, im;
  bool operator==(const CAcc&) const = default;
};

CAcc mac(const CAcc& acc, const QComplex& a, const QComplex& b, bool conj_a, bool& sticky);

/// (1 + 1/x)^-1 = x/(1+x) in [0, 1) for x >= 0, evaluated the way the
/// estimation datapath does: normalize 1+x into [1, 2), seed a reciprocal
/// from a 32-entry table indexed by the top 5 fraction bits, refine with a
/// single Newton-Raphson step, denormalize and subtract from one. The result
/// is clamped to [0, 1 - ulp] in the requested format (u0.14 by default).
QValue reciprocal_1px(const QValue& x, QFormat out = QFormat{0, 14, false});

/// 1/x for x > 0 through the same table + single-step Newton-Raphson path,
/// delivered in the requested format (saturating).
QValue reciprocal_pos(const QValue& x, QFormat out, bool& sticky);

/// Word lengths of the equalizer datapath. Inputs are fixed by the design
/// (h: s0.10 after global scaling, y: s6.4); the internal widths are design
/// assumptions kept configurable so they can be swept.
struct FixedFormats {
  QFormat h{0, 10, true};
  QFormat y{6, 4, true};
  QFormat vec{6, 10, true};    // x, r, z vectors
  QFormat acc{10, 14, true};   // MAC accumulators (4 guard bits folded in)
  QFormat stat{12, 12, true};  // scalar statistics: v_r, v_z, k, gains
  QFormat alpha{0, 14, false}; // denoiser gains in [0, 1)
};

}  // namespace nope::fxp
