#include "nope/nope_fixed.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nope::fxp {

namespace {

bool hardware_order(const SystemDims& d) { return d.rx_antennas == 64 && d.users == 16; }

QValue stat_of(double x, const FixedFormats& f) { return quantize(x, f.stat); }

}  // namespace

QuantizedInputs scale_and_quantize_inputs(const ChannelMatrix& h, const VecC& y,
                                          const FixedFormats& fmts) {
  const MatC& m = h.entries();
  if (y.size() != m.rows())
    throw std::invalid_argument("scale_and_quantize_inputs: y length must equal B");
  double max_abs = 0.0;
  for (int u = 0; u < m.cols(); ++u)
    for (int b = 0; b < m.rows(); ++b) {
      max_abs = std::max(max_abs, std::abs(m(b, u).real()));
      max_abs = std::max(max_abs, std::abs(m(b, u).imag()));
    }
  if (max_abs == 0.0) throw std::invalid_argument("scale_and_quantize_inputs: all-zero H");

  QuantizedInputs in;
  in.dims = h.dims();
  in.fmts = fmts;
  in.scale = 1.0 / max_abs;
  in.h.reserve(size_t(m.rows()) * size_t(m.cols()));
  for (int b = 0; b < m.rows(); ++b)
    for (int u = 0; u < m.cols(); ++u)
      in.h.push_back(quantize_complex(m(b, u).real() * in.scale, m(b, u).imag() * in.scale,
                                      fmts.h));
  in.y.reserve(size_t(y.size()));
  for (int b = 0; b < y.size(); ++b)
    in.y.push_back(quantize_complex(y[b].real(), y[b].imag(), fmts.y));
  return in;
}

QuantizedGains estimate_gains_fixed(const QuantizedInputs& in, bool& sticky) {
  const int b_count = in.dims.rx_antennas;
  const int u_count = in.dims.users;
  QuantizedGains g;
  g.d2.reserve(size_t(u_count));
  g.d2_inv.reserve(size_t(u_count));
  CAcc mean_acc{QValue::zero(in.fmts.acc), QValue::zero(in.fmts.acc)};
  for (int u = 0; u < u_count; ++u) {
    CAcc acc{QValue::zero(in.fmts.acc), QValue::zero(in.fmts.acc)};
    for (int b = 0; b < b_count; ++b) {
      const QComplex& e = in.h[size_t(b) * u_count + u];
      acc = mac(acc, e, e, /*conj_a=*/true, sticky);
    }
    QValue d2 = convert(acc.re, in.fmts.stat, sticky);
    if (d2.raw() <= 0)
      throw std::runtime_error("estimate_gains_fixed: user " + std::to_string(u) +
                               " has a zero channel column");
    g.d2.push_back(d2);
    g.d2_inv.push_back(reciprocal_pos(d2, in.fmts.stat, sticky));
    mean_acc.re = add_to(mean_acc.re, d2, in.fmts.acc, sticky);
  }
  const QValue inv_u = stat_of(1.0 / u_count, in.fmts);
  g.d2_mean = mul_to(mean_acc.re, inv_u, in.fmts.stat, sticky);
  return g;
}

FixedIterState fixed_initial_state(const QuantizedInputs& in) {
  FixedIterState st;
  const QComplex zero_vec{QValue::zero(in.fmts.vec), QValue::zero(in.fmts.vec)};
  st.x.assign(size_t(in.dims.users), zero_vec);
  st.z.assign(size_t(in.dims.users), zero_vec);
  st.r.assign(size_t(in.dims.rx_antennas), zero_vec);
  st.v_r = st.v_z_re = st.v_z_im = st.k = QValue::zero(in.fmts.stat);
  st.alpha_re.assign(size_t(in.dims.users), QValue::zero(in.fmts.alpha));
  st.alpha_im.assign(size_t(in.dims.users), QValue::zero(in.fmts.alpha));
  st.rho.assign(size_t(in.dims.users), QValue::zero(in.fmts.stat));
  st.alpha_mean = QValue::zero(in.fmts.stat);
  return st;
}

namespace kernel {

std::vector<CAcc> forward_matvec(const QuantizedInputs& in, const std::vector<QComplex>& x,
                                 bool& sticky) {
  const int b_count = in.dims.rx_antennas;
  const int u_count = in.dims.users;
  const bool hw = hardware_order(in.dims);
  std::vector<CAcc> out(size_t(b_count), CAcc{QValue::zero(in.fmts.acc), QValue::zero(in.fmts.acc)});
  for (int b = 0; b < b_count; ++b) {
    const int start = hw ? b % 16 : 0;
    CAcc acc = out[size_t(b)];
    for (int c = 0; c < u_count; ++c) {
      const int j = (start + c) % u_count;
      acc = mac(acc, in.h[size_t(b) * u_count + j], x[size_t(j)], /*conj_a=*/false, sticky);
    }
    out[size_t(b)] = acc;
  }
  return out;
}

std::vector<CAcc> adjoint_matvec(const QuantizedInputs& in, const std::vector<QComplex>& r,
                                 bool& sticky) {
  const int b_count = in.dims.rx_antennas;
  const int u_count = in.dims.users;
  const QFormat accf = in.fmts.acc;
  std::vector<CAcc> out(size_t(u_count), CAcc{QValue::zero(accf), QValue::zero(accf)});

  if (!hardware_order(in.dims)) {
    for (int j = 0; j < u_count; ++j) {
      CAcc acc = out[size_t(j)];
      for (int b = 0; b < b_count; ++b)
        acc = mac(acc, in.h[size_t(b) * u_count + j], r[size_t(b)], /*conj_a=*/true, sticky);
      out[size_t(j)] = acc;
    }
    return out;
  }

  // Four 16-row blocks; within a block, output j consumes rows j, j-1, ...
  // (mod 16), which is the post-shift rotation order.
  std::array<std::vector<CAcc>, 4> partial;
  for (int m = 0; m < 4; ++m) {
    partial[size_t(m)].assign(16, CAcc{QValue::zero(accf), QValue::zero(accf)});
    for (int j = 0; j < 16; ++j) {
      CAcc acc = partial[size_t(m)][size_t(j)];
      for (int c = 0; c < 16; ++c) {
        const int b_local = (j - c + 16) % 16;
        const int b = 16 * m + b_local;
        acc = mac(acc, in.h[size_t(b) * 16 + j], r[size_t(b)], /*conj_a=*/true, sticky);
      }
      partial[size_t(m)][size_t(j)] = acc;
    }
  }
  // Exchange cycle 1: unit 2 absorbs unit 1, unit 3 absorbs unit 4;
  // cycle 2: unit 3 absorbs unit 2.
  for (int j = 0; j < 16; ++j) {
    CAcc t_a{add_to(partial[1][size_t(j)].re, partial[0][size_t(j)].re, accf, sticky),
             add_to(partial[1][size_t(j)].im, partial[0][size_t(j)].im, accf, sticky)};
    CAcc t_b{add_to(partial[2][size_t(j)].re, partial[3][size_t(j)].re, accf, sticky),
             add_to(partial[2][size_t(j)].im, partial[3][size_t(j)].im, accf, sticky)};
    out[size_t(j)] = {add_to(t_b.re, t_a.re, accf, sticky),
                      add_to(t_b.im, t_a.im, accf, sticky)};
  }
  return out;
}

QComplex residual_entry(const QComplex& y_b, const CAcc& hx_b, const QComplex& r_prev_b,
                        const QValue& onsager_coeff, const FixedFormats& fmts, bool& sticky) {
  const QFormat accf = fmts.acc;
  auto one_part = [&](const QValue& y_p, const QValue& hx_p, const QValue& r_p) {
    const QValue y_acc = convert(y_p, accf, sticky);
    const QValue on = mul_to(onsager_coeff, r_p, accf, sticky);
    const QValue s = add_to(add_to(y_acc, negate(hx_p, sticky), accf, sticky), on, accf, sticky);
    return convert(s, fmts.vec, sticky);
  };
  return {one_part(y_b.re, hx_b.re, r_prev_b.re), one_part(y_b.im, hx_b.im, r_prev_b.im)};
}

QValue vr_statistic(const std::vector<QComplex>& r, const QValue& beta_half,
                    const FixedFormats& fmts, bool& sticky) {
  CAcc acc{QValue::zero(fmts.acc), QValue::zero(fmts.acc)};
  for (const QComplex& e : r) acc = mac(acc, e, e, /*conj_a=*/true, sticky);
  return mul_to(acc.re, beta_half, fmts.stat, sticky);
}

QComplex z_entry(const QComplex& x_u, const CAcc& hr_u, const QValue& d2_inv_u,
                 const FixedFormats& fmts, bool& sticky) {
  const QValue zr = mul_to(d2_inv_u, hr_u.re, fmts.vec, sticky);
  const QValue zi = mul_to(d2_inv_u, hr_u.im, fmts.vec, sticky);
  return {add_to(x_u.re, zr, fmts.vec, sticky), add_to(x_u.im, zi, fmts.vec, sticky)};
}

CAcc vz_accumulate(const CAcc& acc, const QComplex& z_u, const QValue& d2_u,
                   const FixedFormats& fmts, bool& sticky) {
  const QValue sq_re = mul_to(z_u.re, z_u.re, fmts.acc, sticky);
  const QValue sq_im = mul_to(z_u.im, z_u.im, fmts.acc, sticky);
  return {add_to(acc.re, mul_to(d2_u, sq_re, fmts.acc, sticky), fmts.acc, sticky),
          add_to(acc.im, mul_to(d2_u, sq_im, fmts.acc, sticky), fmts.acc, sticky)};
}

EuUserOut eu_user_step(const QComplex& z_u, const QValue& d2_u, const QValue& v_z_re,
                       const QValue& v_z_im, const QValue& v_r, const QValue& k,
                       const QValue& rho_base, const FixedFormats& fmts, bool& sticky) {
  const QValue kd = mul_to(k, d2_u, fmts.stat, sticky);
  auto branch = [&](const QValue& v_z) {
    QValue diff = add_to(v_z, negate(v_r, sticky), fmts.stat, sticky);
    if (diff.raw() < 0) diff = QValue::zero(fmts.stat);  // no negative signal power
    return mul_to(kd, diff, fmts.stat, sticky);
  };
  EuUserOut o;
  o.alpha_re = reciprocal_1px(branch(v_z_re), fmts.alpha);
  o.alpha_im = reciprocal_1px(branch(v_z_im), fmts.alpha);
  o.x_next = {mul_to(o.alpha_re, z_u.re, fmts.vec, sticky),
              mul_to(o.alpha_im, z_u.im, fmts.vec, sticky)};
  o.rho = mul_to(rho_base, d2_u, fmts.stat, sticky);
  return o;
}

}  // namespace kernel

void fixed_iterate(FixedIterState& st, const QuantizedInputs& in, const QuantizedGains& gains,
                   bool& sticky) {
  const int b_count = in.dims.rx_antennas;
  const int u_count = in.dims.users;
  const FixedFormats& f = in.fmts;
  const double beta = in.dims.beta();

  const QValue beta_half = stat_of(beta / 2.0, f);
  const QValue onsager_coeff = mul_to(beta_half, st.alpha_mean, f.stat, sticky);

  const std::vector<CAcc> hx = kernel::forward_matvec(in, st.x, sticky);
  for (int b = 0; b < b_count; ++b)
    st.r[size_t(b)] =
        kernel::residual_entry(in.y[size_t(b)], hx[size_t(b)], st.r[size_t(b)], onsager_coeff, f, sticky);
  st.v_r = kernel::vr_statistic(st.r, beta_half, f, sticky);

  const std::vector<CAcc> hr = kernel::adjoint_matvec(in, st.r, sticky);
  for (int u = 0; u < u_count; ++u)
    st.z[size_t(u)] = kernel::z_entry(st.x[size_t(u)], hr[size_t(u)], gains.d2_inv[size_t(u)], f, sticky);

  CAcc vz{QValue::zero(f.acc), QValue::zero(f.acc)};
  for (int u = 0; u < u_count; ++u)
    vz = kernel::vz_accumulate(vz, st.z[size_t(u)], gains.d2[size_t(u)], f, sticky);
  st.v_z_re = convert(vz.re, f.stat, sticky);
  st.v_z_im = convert(vz.im, f.stat, sticky);

  const QValue k_denom = mul_to(st.v_r, gains.d2_mean, f.stat, sticky);
  if (st.v_r.raw() == 0 || k_denom.raw() == 0) {
    // Residual energy quantizes to zero: the estimate reproduces y exactly
    // at datapath precision. Freeze the denoiser; x and rho carry over.
    st.k = QValue::zero(f.stat);
    for (int u = 0; u < u_count; ++u) {
      st.alpha_re[size_t(u)] = QValue::zero(f.alpha);
      st.alpha_im[size_t(u)] = QValue::zero(f.alpha);
    }
    st.alpha_mean = QValue::zero(f.stat);
    ++st.t;
    return;
  }

  st.k = reciprocal_pos(k_denom, f.stat, sticky);

  const QValue rho_coeff = stat_of(2.0 * b_count / beta, f);
  const QValue rho_base =
      mul_to(mul_to(rho_coeff, st.k, f.stat, sticky), gains.d2_mean, f.stat, sticky);
  std::int64_t alpha_sum_raw = 0;
  for (int u = 0; u < u_count; ++u) {
    const kernel::EuUserOut o = kernel::eu_user_step(st.z[size_t(u)], gains.d2[size_t(u)],
                                                     st.v_z_re, st.v_z_im, st.v_r, st.k,
                                                     rho_base, f, sticky);
    st.alpha_re[size_t(u)] = o.alpha_re;
    st.alpha_im[size_t(u)] = o.alpha_im;
    st.x[size_t(u)] = o.x_next;
    st.rho[size_t(u)] = o.rho;
    alpha_sum_raw += o.alpha_re.raw() + o.alpha_im.raw();
  }
  const QValue alpha_sum(alpha_sum_raw, QFormat{20, f.alpha.frac_bits, true});
  st.alpha_mean = mul_to(alpha_sum, stat_of(1.0 / u_count, f), f.stat, sticky);
  ++st.t;
}

NopeState dequantize_state(const FixedIterState& st, double scale) {
  NopeState s;
  s.t = st.t;
  const auto to_c = [](const QComplex& q) {
    return std::complex<double>(q.re.to_double(), q.im.to_double());
  };
  s.x.resize(Eigen::Index(st.x.size()));
  s.z.resize(Eigen::Index(st.z.size()));
  s.r.resize(Eigen::Index(st.r.size()));
  for (size_t u = 0; u < st.x.size(); ++u) s.x[Eigen::Index(u)] = to_c(st.x[u]) * scale;
  for (size_t u = 0; u < st.z.size(); ++u) s.z[Eigen::Index(u)] = to_c(st.z[u]) * scale;
  for (size_t b = 0; b < st.r.size(); ++b) s.r[Eigen::Index(b)] = to_c(st.r[b]);
  s.v_r = st.v_r.to_double();
  s.v_z_re = st.v_z_re.to_double();
  s.v_z_im = st.v_z_im.to_double();
  s.k = st.k.to_double();
  s.alpha_re.resize(Eigen::Index(st.alpha_re.size()));
  s.alpha_im.resize(Eigen::Index(st.alpha_im.size()));
  s.rho.resize(Eigen::Index(st.rho.size()));
  for (size_t u = 0; u < st.alpha_re.size(); ++u) {
    s.alpha_re[Eigen::Index(u)] = st.alpha_re[u].to_double();
    s.alpha_im[Eigen::Index(u)] = st.alpha_im[u].to_double();
    s.rho[Eigen::Index(u)] = st.rho[u].to_double();
  }
  s.alpha_mean = st.alpha_mean.to_double();
  return s;
}

FixedRunResult nope_run_fixed(const ChannelMatrix& h, const VecC& y, int t_max) {
  if (t_max < 1) throw std::invalid_argument("nope_run_fixed: t_max must be >= 1");
  bool sticky = false;
  const QuantizedInputs in = scale_and_quantize_inputs(h, y);
  const QuantizedGains gains = estimate_gains_fixed(in, sticky);
  FixedIterState st = fixed_initial_state(in);
  for (int t = 0; t < t_max; ++t) fixed_iterate(st, in, gains, sticky);
  FixedRunResult out;
  out.scale = in.scale;
  out.saturated = sticky;
  out.state = dequantize_state(st, in.scale);
  return out;
}

namespace {

std::uint64_t mask_to_width(std::int64_t raw, int width) {
  if (width >= 64) return std::uint64_t(raw);
  return std::uint64_t(raw) & ((std::uint64_t(1) << width) - 1);
}

std::int64_t sign_extend(std::uint64_t bits, const QFormat& fmt) {
  const int w = fmt.width();
  if (fmt.is_signed && w < 64 && (bits >> (w - 1)) != 0)
    bits |= ~((std::uint64_t(1) << w) - 1);
  return std::int64_t(bits);
}

}  // namespace

void write_golden(std::ostream& os, const std::vector<GoldenRecord>& records) {
  for (const auto& r : records) {
    os << r.tag << " 0x" << std::hex << mask_to_width(r.raw, r.fmt.width()) << std::dec << " "
       << to_string(r.fmt) << "\n";
  }
}

std::vector<GoldenRecord> read_golden(std::istream& is) {
  std::vector<GoldenRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag, hex, fmt_token;
    if (!(ls >> tag >> hex >> fmt_token))
      throw std::runtime_error("golden vector: malformed line: " + line);
    if (hex.rfind("0x", 0) != 0)
      throw std::runtime_error("golden vector: raw field must be hex: " + line);
    GoldenRecord rec;
    rec.tag = tag;
    rec.fmt = qformat_from_string(fmt_token);
    rec.raw = sign_extend(std::stoull(hex.substr(2), nullptr, 16), rec.fmt);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<GoldenRecord> golden_records(const ChannelMatrix& h, const VecC& y, int t_max) {
  bool sticky = false;
  const QuantizedInputs in = scale_and_quantize_inputs(h, y);
  const QuantizedGains gains = estimate_gains_fixed(in, sticky);

  std::vector<GoldenRecord> rec;
  auto push = [&rec](std::string tag, const QValue& v) {
    rec.push_back({std::move(tag), v.raw(), v.fmt()});
  };
  const int b_count = in.dims.rx_antennas;
  const int u_count = in.dims.users;
  for (int b = 0; b < b_count; ++b)
    for (int u = 0; u < u_count; ++u) {
      const QComplex& e = in.h[size_t(b) * u_count + u];
      push("h[" + std::to_string(b) + "][" + std::to_string(u) + "].re", e.re);
      push("h[" + std::to_string(b) + "][" + std::to_string(u) + "].im", e.im);
    }
  for (int b = 0; b < b_count; ++b) {
    push("y[" + std::to_string(b) + "].re", in.y[size_t(b)].re);
    push("y[" + std::to_string(b) + "].im", in.y[size_t(b)].im);
  }
  for (int u = 0; u < u_count; ++u) {
    push("d2[" + std::to_string(u) + "]", gains.d2[size_t(u)]);
    push("d2_inv[" + std::to_string(u) + "]", gains.d2_inv[size_t(u)]);
  }

  FixedIterState st = fixed_initial_state(in);
  for (int t = 1; t <= t_max; ++t) {
    fixed_iterate(st, in, gains, sticky);
    const std::string p = "it" + std::to_string(t) + ".";
    push(p + "v_r", st.v_r);
    push(p + "v_z_re", st.v_z_re);
    push(p + "v_z_im", st.v_z_im);
    push(p + "k", st.k);
    push(p + "alpha_mean", st.alpha_mean);
  }
  for (int u = 0; u < u_count; ++u) {
    push("z[" + std::to_string(u) + "].re", st.z[size_t(u)].re);
    push("z[" + std::to_string(u) + "].im", st.z[size_t(u)].im);
  }
  return rec;
}

}  // namespace nope::fxp
