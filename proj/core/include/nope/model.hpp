#pragma once

#include <Eigen/Dense>

#include "nope/rng.hpp"

namespace nope {

using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;
using MatC = Eigen::MatrixXcd;
using MatR = Eigen::MatrixXd;

/// Uplink dimensions: B receive antennas at the base station serving U
/// single-antenna users. Overloaded systems (U > B) are rejected.
struct SystemDims {
  int rx_antennas = 0;  // B
  int users = 0;        // U

  SystemDims(int b, int u);

  /// Load factor U/B.
  double beta() const { return double(users) / double(rx_antennas); }

  bool operator==(const SystemDims&) const = default;
};

/// A B-by-U complex channel realization. Entries are validated to be finite.
class ChannelMatrix {
public:
  ChannelMatrix(MatC entries, SystemDims dims);

  const MatC& entries() const { return entries_; }
  const SystemDims& dims() const { return dims_; }

private:
  MatC entries_;
  SystemDims dims_;
};

/// Estimated per-user squared large-scale gains and their reciprocals.
struct GainProfile {
  VecR d2;        // column energies, one per user
  VecR d2_inv;    // 1 / d2
  double d2_mean = 0.0;
};

/// Complex receive-noise variance per antenna. `disabled()` builds the
/// noise-free limit used by deterministic tests and noiseless sweeps.
struct NoiseSpec {
  explicit NoiseSpec(double n0);
  static NoiseSpec disabled() { return NoiseSpec(); }

  bool enabled() const { return n0 > 0.0; }

  double n0 = 0.0;

private:
  NoiseSpec() = default;
};

/// Draws H with i.i.d. circularly-symmetric complex Gaussian entries of
/// variance 1/B per entry (uniform channel gains).
ChannelMatrix generate_channel(const SystemDims& dims, Philox& rng);

/// Draws H = H_tilde * diag(gains): the uniform-gain matrix above with
/// column u scaled by gains[u]. Gains must be nonnegative and of length U.
ChannelMatrix generate_channel(const SystemDims& dims, const VecR& gains, Philox& rng);

/// y = H x + n with n i.i.d. circularly-symmetric complex Gaussian of
/// variance noise.n0 per entry (no noise drawn when disabled).
VecC transmit(const ChannelMatrix& h, const VecC& x, const NoiseSpec& noise, Philox& rng);

/// Per-user column energies d2[u] = sum_b |H[b,u]|^2 plus reciprocals and
/// mean. A zero column is an error: its reciprocal is undefined and the
/// corresponding user cannot be equalized.
GainProfile estimate_gains(const ChannelMatrix& h);

}  // namespace nope
