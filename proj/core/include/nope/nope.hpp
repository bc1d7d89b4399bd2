#pragma once

#include "nope/model.hpp"

namespace nope {

/// State of the robust nonparametric equalizer after completing iteration t.
///
/// z is the equalized output for hard or soft demapping, x the per-user
/// denoised estimate feeding the next residual. The per-user denoiser gains
/// alpha are learned from the data on the real and imaginary branches
/// separately and live in [0, 1).
struct NopeState {
  int t = 0;
  VecC x, r, z;
  double v_r = 0.0;      // (beta/2) ||r||^2
  double v_z_re = 0.0;   // sum_u d2[u] Re{z_u}^2
  double v_z_im = 0.0;   // sum_u d2[u] Im{z_u}^2
  double k = 0.0;        // 1 / (v_r * mean(d2))
  VecR alpha_re, alpha_im;
  double alpha_mean = 0.0;  // (1/U) sum_u (alpha_re[u] + alpha_im[u])
  VecR rho;                 // per-user post-equalization SNR
};

/// Signal-power and noise-level estimates implied by a state; exposed for
/// diagnostics only (the iteration consumes them in folded form).
struct UnfoldedEstimates {
  double ex_re = 0.0;  // (v_z_re - v_r) / sum_u d2[u]
  double ex_im = 0.0;
  double ex = 0.0;     // ex_re + ex_im
  double tau = 0.0;    // ||r||^2 / B = 2 v_r / U
};

NopeState nope_initial_state(const SystemDims& dims);

/// One full iteration:
///   r <- y - H x + (beta/2) alpha_mean r_prev;   v_r <- (beta/2) ||r||^2;
///   z <- x + d2_inv o (H^H r);
///   v_z_re/im <- gain-weighted squared norms of Re/Im{z};
///   k <- 1 / (v_r mean(d2));
///   alpha_{u,re/im} <- s/(1+s), s = max(k d2[u] (v_z_re/im - v_r), 0);
///   x_u <- alpha_re Re{z_u} + j alpha_im Im{z_u};
///   rho_u <- (2B/beta) k mean(d2) d2[u].
///
/// A residual energy below 1e-20 ||y||^2 (or exactly zero) means the current
/// estimate already reproduces y: the iteration returns early with z
/// computed, alpha = 0, and x and rho carried over.
NopeState nope_iterate(const NopeState& state, const ChannelMatrix& h, const VecC& y,
                       const GainProfile& gains);

/// Full equalizer: precomputes the gain profile and runs t_max iterations
/// from the zero state. Consumes only (H, y, t_max) -- no signal power, noise
/// power, or constellation knowledge.
NopeState nope_run(const ChannelMatrix& h, const VecC& y, int t_max);

UnfoldedEstimates unfolded_estimates(const NopeState& state, const GainProfile& gains,
                                     const SystemDims& dims);

}  // namespace nope
