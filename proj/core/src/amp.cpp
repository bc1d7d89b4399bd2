#include "nope/amp.hpp"

#include <stdexcept>

#include "nope/lmmse.hpp"

namespace nope {

AmpState lmmse_amp_run(const ChannelMatrix& h, const VecC& y, double ex, int t_max) {
  if (!(ex > 0.0)) throw std::invalid_argument("lmmse_amp_run: ex must be positive");
  if (t_max < 1) throw std::invalid_argument("lmmse_amp_run: t_max must be >= 1");
  const MatC& m = h.entries();
  if (y.size() != m.rows()) throw std::invalid_argument("lmmse_amp_run: y length must equal B");

  const int b = h.dims().rx_antennas;
  const double beta = h.dims().beta();

  AmpState s;
  s.x = VecC::Zero(h.dims().users);
  s.r = y;  // r1 = y - H * 0
  for (int t = 1; t <= t_max; ++t) {
    s.sigma2 = s.r.squaredNorm() / b;
    s.tau = psi_argmin(s.sigma2, ex);
    s.z = s.x + m.adjoint() * s.r;
    const double shrink = ex / (ex + s.tau);
    s.x = shrink * s.z;
    s.r = y - m * s.x + beta * shrink * s.r;
    s.t = t;
  }
  return s;
}

double sure_psi_hat(double sigma2, double gamma, double z_norm2, int u_count) {
  if (gamma < 0.0) throw std::invalid_argument("sure_psi_hat: gamma must be nonnegative");
  const double gp1 = gamma + 1.0;
  return sigma2 * (gamma - 1.0) / gp1 + z_norm2 / (u_count * gp1 * gp1);
}

double sure_gamma_min(double z_norm2, double sigma2, int u_count) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sure_gamma_min: sigma2 must be positive");
  const double g = z_norm2 / (u_count * sigma2) - 1.0;
  return g > 0.0 ? g : 0.0;
}

}  // namespace nope
