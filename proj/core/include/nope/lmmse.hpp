#pragma once

#include <optional>

#include "nope/model.hpp"

namespace nope {

struct LmmseOutput {
  VecC xhat;
  std::optional<double> mse_empirical;  // ||xhat - x||^2 / U when truth is known
};

/// Exact linear MMSE estimate xhat = (H^H H + rho I)^-1 H^H y computed with a
/// Cholesky solve of the regularized Gram matrix; no explicit inverse is
/// formed. rho is the noise-to-signal ratio N0 / Ex. With rho = 0 this is the
/// least-squares (zero-forcing) solution and H must have full column rank.
LmmseOutput lmmse_equalize(const ChannelMatrix& h, const VecC& y, double rho);

/// Fills mse_empirical from the known transmit vector.
LmmseOutput with_empirical_mse(LmmseOutput out, const VecC& x_truth);

/// Optimal linear estimator for a real-valued zero-mean signal:
///   xhat_re = (Re{H^H H} + rho_real I)^-1 Re{H^H y},  rho_real = N0 / (2 Ex).
/// The imaginary part of the estimate is identically zero.
VecR lmmse_equalize_real(const ChannelMatrix& h, const VecC& y, double rho_real);

/// Mean-square error of the scalar Gaussian-prior denoiser with shrinkage
/// parameter tau at effective noise level sigma2 and signal power ex:
///   psi = (tau^2 ex + sigma2 ex^2) / (ex + tau)^2.
double psi(double sigma2, double tau, double ex);

/// argmin over tau >= 0 of psi(sigma2, ., ex); closed form tau* = sigma2.
double psi_argmin(double sigma2, double ex);

}  // namespace nope
