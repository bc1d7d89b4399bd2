#include "nope/model.hpp"

#include <stdexcept>

namespace nope {

SystemDims::SystemDims(int b, int u) : rx_antennas(b), users(u) {
  if (b <= 0 || u <= 0) throw std::invalid_argument("SystemDims: B and U must be positive");
  if (u > b) throw std::invalid_argument("SystemDims: overloaded system (U > B) rejected");
}

ChannelMatrix::ChannelMatrix(MatC entries, SystemDims dims)
    : entries_(std::move(entries)), dims_(dims) {
  if (entries_.rows() != dims_.rx_antennas || entries_.cols() != dims_.users)
    throw std::invalid_argument("ChannelMatrix: shape does not match dims");
  if (!entries_.allFinite())
    throw std::invalid_argument("ChannelMatrix: non-finite entry");
}

NoiseSpec::NoiseSpec(double n0_in) : n0(n0_in) {
  if (!(n0 > 0.0)) throw std::invalid_argument("NoiseSpec: n0 must be positive");
}

ChannelMatrix generate_channel(const SystemDims& dims, Philox& rng) {
  const double var = 1.0 / dims.rx_antennas;
  MatC h(dims.rx_antennas, dims.users);
  // Column-major fill so per-column draws are contiguous in the stream.
  for (int u = 0; u < dims.users; ++u)
    for (int b = 0; b < dims.rx_antennas; ++b) h(b, u) = rng.cgaussian(var);
  return {std::move(h), dims};
}

ChannelMatrix generate_channel(const SystemDims& dims, const VecR& gains, Philox& rng) {
  if (gains.size() != dims.users)
    throw std::invalid_argument("generate_channel: gains length must equal U");
  if ((gains.array() < 0.0).any())
    throw std::invalid_argument("generate_channel: negative gain");
  ChannelMatrix uniform = generate_channel(dims, rng);
  MatC h = uniform.entries() * gains.asDiagonal();
  return {std::move(h), dims};
}

VecC transmit(const ChannelMatrix& h, const VecC& x, const NoiseSpec& noise, Philox& rng) {
  if (x.size() != h.dims().users)
    throw std::invalid_argument("transmit: x length must equal U");
  VecC y = h.entries() * x;
  if (noise.enabled())
    for (int b = 0; b < y.size(); ++b) y[b] += rng.cgaussian(noise.n0);
  return y;
}

GainProfile estimate_gains(const ChannelMatrix& h) {
  GainProfile g;
  g.d2 = h.entries().colwise().squaredNorm().transpose();
  g.d2_inv.resize(g.d2.size());
  for (int u = 0; u < g.d2.size(); ++u) {
    if (g.d2[u] <= 0.0)
      throw std::runtime_error("estimate_gains: user " + std::to_string(u) +
                               " has a zero channel column");
    g.d2_inv[u] = 1.0 / g.d2[u];
  }
  g.d2_mean = g.d2.mean();
  return g;
}

}  // namespace nope
