#pragma once

#include <iosfwd>
#include <vector>

#include "nope/fixed_point.hpp"
#include "nope/nope.hpp"

namespace nope::fxp {

/// Channel and receive vector quantized for the datapath. The channel is
/// globally scaled so that all real and imaginary entries fit below one
/// before quantization to s0.10; y is quantized to s6.4 and not rescaled
/// (the gain estimator absorbs the channel scaling).
struct QuantizedInputs {
  SystemDims dims{1, 1};
  std::vector<QComplex> h;  // row-major B x U, format fmts.h
  std::vector<QComplex> y;  // length B, format fmts.y
  double scale = 1.0;       // h holds scale * H
  FixedFormats fmts;
};

QuantizedInputs scale_and_quantize_inputs(const ChannelMatrix& h, const VecC& y,
                                          const FixedFormats& fmts = {});

struct QuantizedGains {
  std::vector<QValue> d2;      // stat format
  std::vector<QValue> d2_inv;  // stat format
  QValue d2_mean;              // stat format
};

/// Column energies accumulated with the datapath MAC; a column that
/// quantizes to zero is an error (its reciprocal is undefined).
QuantizedGains estimate_gains_fixed(const QuantizedInputs& in, bool& sticky);

/// Raw state of the fixed-point iteration; all payloads are bit-true.
struct FixedIterState {
  int t = 0;
  std::vector<QComplex> x, z;  // vec format, length U
  std::vector<QComplex> r;     // vec format, length B
  QValue v_r, v_z_re, v_z_im, k;           // stat format
  std::vector<QValue> alpha_re, alpha_im;  // alpha format
  std::vector<QValue> rho;                 // stat format
  QValue alpha_mean;                       // stat format
};

FixedIterState fixed_initial_state(const QuantizedInputs& in);

/// One bit-true iteration. Summation orders follow the hardware schedule
/// when dims are 64x16 (ring order in the forward pass, rotating outputs
/// plus the two-cycle block exchange in the adjoint pass); other dims use
/// plain ascending order.
void fixed_iterate(FixedIterState& st, const QuantizedInputs& in, const QuantizedGains& gains,
                   bool& sticky);

namespace kernel {

/// Row-wise H*x in the accumulator format, one accumulator per receive
/// antenna, column ring order starting at row mod 16 for 64x16.
std::vector<CAcc> forward_matvec(const QuantizedInputs& in, const std::vector<QComplex>& x,
                                 bool& sticky);

/// Column-wise H^H r, one accumulator per user. For 64x16 each 16-row block
/// accumulates rows j, j-1, ... (mod 16) for output j and the four block
/// partials combine as ((p2+p3)+(p1+p0)), matching the exchange schedule.
std::vector<CAcc> adjoint_matvec(const QuantizedInputs& in, const std::vector<QComplex>& r,
                                 bool& sticky);

QComplex residual_entry(const QComplex& y_b, const CAcc& hx_b, const QComplex& r_prev_b,
                        const QValue& onsager_coeff, const FixedFormats& fmts, bool& sticky);

/// v_r = beta_half * sum_b |r_b|^2, flat order.
QValue vr_statistic(const std::vector<QComplex>& r, const QValue& beta_half,
                    const FixedFormats& fmts, bool& sticky);

QComplex z_entry(const QComplex& x_u, const CAcc& hr_u, const QValue& d2_inv_u,
                 const FixedFormats& fmts, bool& sticky);

/// One step of the two norm MAC units: acc.re += d2_u Re{z_u}^2,
/// acc.im += d2_u Im{z_u}^2.
CAcc vz_accumulate(const CAcc& acc, const QComplex& z_u, const QValue& d2_u,
                   const FixedFormats& fmts, bool& sticky);

struct EuUserOut {
  QValue alpha_re, alpha_im;  // alpha format
  QComplex x_next;            // vec format
  QValue rho;                 // stat format
};

/// Per-user denoiser update (the phase-two cycle body of the estimation
/// unit): s = max(k d2_u (v_z - v_r), 0) per branch, alpha through the
/// reciprocal unit, posterior mean, and post-equalization SNR
/// rho_u = rho_base * d2_u with rho_base = (2B/beta) k mean(d2) computed
/// once per iteration.
EuUserOut eu_user_step(const QComplex& z_u, const QValue& d2_u, const QValue& v_z_re,
                       const QValue& v_z_im, const QValue& v_r, const QValue& k,
                       const QValue& rho_base, const FixedFormats& fmts, bool& sticky);

}  // namespace kernel

struct FixedRunResult {
  NopeState state;   // dequantized; z and x are rescaled to the input channel
  double scale = 1.0;
  bool saturated = false;
};

/// Bit-true fixed-point equalizer run: quantize inputs, estimate gains,
/// iterate t_max times. Accepts only (H, y, t_max), like the float path.
FixedRunResult nope_run_fixed(const ChannelMatrix& h, const VecC& y, int t_max);

/// Dequantized view of a raw state; z and x are multiplied by scale so they
/// refer to the unscaled channel.
NopeState dequantize_state(const FixedIterState& st, double scale);

// Golden vectors: one record per line, "tag raw_hex fmt", e.g.
//   h[0][3].re 0x2f3 s0.10
// raw_hex is the two's-complement payload masked to the format width.
struct GoldenRecord {
  std::string tag;
  std::int64_t raw = 0;
  QFormat fmt;
  bool operator==(const GoldenRecord&) const = default;
};

void write_golden(std::ostream& os, const std::vector<GoldenRecord>& records);
std::vector<GoldenRecord> read_golden(std::istream& is);

/// Records for a full run: quantized inputs, per-iteration scalar
/// statistics, and the final output vector.
std::vector<GoldenRecord> golden_records(const ChannelMatrix& h, const VecC& y, int t_max);

}  // namespace nope::fxp
