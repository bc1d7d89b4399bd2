#include "nope/nope.hpp"

#include <algorithm>
#include <stdexcept>

namespace nope {

namespace {
constexpr double kConsistencyFloor = 1e-20;  // relative to ||y||^2
}

NopeState nope_initial_state(const SystemDims& dims) {
  NopeState s;
  s.t = 0;
  s.x = VecC::Zero(dims.users);
  s.r = VecC::Zero(dims.rx_antennas);
  s.z = VecC::Zero(dims.users);
  s.alpha_re = VecR::Zero(dims.users);
  s.alpha_im = VecR::Zero(dims.users);
  s.rho = VecR::Zero(dims.users);
  return s;
}

NopeState nope_iterate(const NopeState& state, const ChannelMatrix& h, const VecC& y,
                       const GainProfile& gains) {
  const MatC& m = h.entries();
  const SystemDims& dims = h.dims();
  if (y.size() != dims.rx_antennas) throw std::invalid_argument("nope_iterate: y length must equal B");
  if (state.x.size() != dims.users || state.r.size() != dims.rx_antennas)
    throw std::invalid_argument("nope_iterate: state does not match dims");
  if (gains.d2.size() != dims.users)
    throw std::invalid_argument("nope_iterate: gains do not match dims");

  const double beta = dims.beta();
  const int u_count = dims.users;

  NopeState next = state;
  next.t = state.t + 1;

  next.r = y - m * state.x + (beta / 2.0) * state.alpha_mean * state.r;
  next.v_r = (beta / 2.0) * next.r.squaredNorm();
  next.z = state.x + (gains.d2_inv.array() * (m.adjoint() * next.r).array()).matrix();
  next.v_z_re = (gains.d2.array() * next.z.real().array().square()).sum();
  next.v_z_im = (gains.d2.array() * next.z.imag().array().square()).sum();

  if (next.v_r <= kConsistencyFloor * y.squaredNorm()) {
    // Exactly consistent: y = H x up to the floor. Keep x and rho, report
    // zero denoiser gains so further iterations are fixed points.
    next.k = 0.0;
    next.alpha_re.setZero();
    next.alpha_im.setZero();
    next.alpha_mean = 0.0;
    return next;
  }

  next.k = 1.0 / (next.v_r * gains.d2_mean);

  double alpha_sum = 0.0;
  for (int u = 0; u < u_count; ++u) {
    // alpha = s/(1+s) with the inner power estimate clamped at zero, so the
    // denoiser stays a contraction even when a branch carries no signal.
    const double s_re = std::max(next.k * gains.d2[u] * (next.v_z_re - next.v_r), 0.0);
    const double s_im = std::max(next.k * gains.d2[u] * (next.v_z_im - next.v_r), 0.0);
    next.alpha_re[u] = s_re / (1.0 + s_re);
    next.alpha_im[u] = s_im / (1.0 + s_im);
    next.x[u] = {next.alpha_re[u] * next.z[u].real(), next.alpha_im[u] * next.z[u].imag()};
    next.rho[u] = (2.0 * dims.rx_antennas / beta) * next.k * gains.d2_mean * gains.d2[u];
    alpha_sum += next.alpha_re[u] + next.alpha_im[u];
  }
  next.alpha_mean = alpha_sum / u_count;
  return next;
}

NopeState nope_run(const ChannelMatrix& h, const VecC& y, int t_max) {
  if (t_max < 1) throw std::invalid_argument("nope_run: t_max must be >= 1");
  const GainProfile gains = estimate_gains(h);
  NopeState s = nope_initial_state(h.dims());
  for (int t = 0; t < t_max; ++t) s = nope_iterate(s, h, y, gains);
  return s;
}

UnfoldedEstimates unfolded_estimates(const NopeState& state, const GainProfile& gains,
                                     const SystemDims& dims) {
  UnfoldedEstimates e;
  const double d2_sum = gains.d2.sum();
  e.ex_re = (state.v_z_re - state.v_r) / d2_sum;
  e.ex_im = (state.v_z_im - state.v_r) / d2_sum;
  e.ex = e.ex_re + e.ex_im;
  e.tau = 2.0 * state.v_r / dims.users;
  return e;
}

}  // namespace nope
