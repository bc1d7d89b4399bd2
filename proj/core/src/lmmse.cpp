#include "nope/lmmse.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

namespace nope {

LmmseOutput lmmse_equalize(const ChannelMatrix& h, const VecC& y, double rho) {
  if (rho < 0.0) throw std::invalid_argument("lmmse_equalize: rho must be nonnegative");
  const MatC& m = h.entries();
  if (y.size() != m.rows()) throw std::invalid_argument("lmmse_equalize: y length must equal B");

  MatC gram = m.adjoint() * m;
  gram.diagonal().array() += rho;
  Eigen::LLT<MatC> llt(gram);
  // The factorization alone does not reliably flag exact rank deficiency.
  if (llt.info() != Eigen::Success || (rho == 0.0 && llt.rcond() < 1e-13))
    throw std::runtime_error("lmmse_equalize: singular system (rho = 0 and rank-deficient H)");
  return {llt.solve(m.adjoint() * y), std::nullopt};
}

LmmseOutput with_empirical_mse(LmmseOutput out, const VecC& x_truth) {
  out.mse_empirical = (out.xhat - x_truth).squaredNorm() / double(x_truth.size());
  return out;
}

VecR lmmse_equalize_real(const ChannelMatrix& h, const VecC& y, double rho_real) {
  if (rho_real < 0.0) throw std::invalid_argument("lmmse_equalize_real: rho must be nonnegative");
  const MatC& m = h.entries();
  if (y.size() != m.rows())
    throw std::invalid_argument("lmmse_equalize_real: y length must equal B");

  // Re{H^H H} = H_re' H_re + H_im' H_im and Re{H^H y} = H_re' y_re + H_im' y_im.
  MatR gram = (m.adjoint() * m).real();
  gram.diagonal().array() += rho_real;
  const VecR rhs = (m.adjoint() * y).real();
  Eigen::LLT<MatR> llt(gram);
  if (llt.info() != Eigen::Success || (rho_real == 0.0 && llt.rcond() < 1e-13))
    throw std::runtime_error("lmmse_equalize_real: singular stacked system");
  return llt.solve(rhs);
}

double psi(double sigma2, double tau, double ex) {
  if (!(ex > 0.0)) throw std::invalid_argument("psi: ex must be positive");
  const double denom = (ex + tau) * (ex + tau);
  return (tau * tau * ex + sigma2 * ex * ex) / denom;
}

double psi_argmin(double sigma2, double ex) {
  if (!(ex > 0.0)) throw std::invalid_argument("psi_argmin: ex must be positive");
  return sigma2;  // unique stationary point of psi on tau >= 0
}

}  // namespace nope
