#pragma once

#include "nope/model.hpp"

namespace nope {

/// State of the parametric Gaussian-prior AMP equalizer after an iteration:
/// z is the equalized output, x the denoised estimate feeding the next
/// residual, r the Onsager-corrected residual.
struct AmpState {
  int t = 0;
  VecC x, r, z;
  double sigma2 = 0.0;  // ||r||^2 / B
  double tau = 0.0;     // shrinkage parameter chosen at this iteration
};

/// Runs exactly t_max iterations of the parametric L-MMSE AMP recursion from
/// x = 0, r = y, using the known signal power ex:
///   sigma2 = ||r||^2 / B;  tau = argmin psi;  z = x + H^H r;
///   x' = ex/(ex+tau) z;    r' = y - H x' + beta * r * ex/(ex+tau).
AmpState lmmse_amp_run(const ChannelMatrix& h, const VecC& y, double ex, int t_max);

/// Observable estimate of the denoiser MSE at gain parameter gamma:
///   sigma2 (gamma-1)/(gamma+1) + z_norm2 / (U (gamma+1)^2).
/// Unbiased, not a norm: it may be negative.
double sure_psi_hat(double sigma2, double gamma, double z_norm2, int u_count);

/// Minimizer of sure_psi_hat over gamma >= 0:
/// max(z_norm2 / (U sigma2) - 1, 0).
double sure_gamma_min(double z_norm2, double sigma2, int u_count);

}  // namespace nope
