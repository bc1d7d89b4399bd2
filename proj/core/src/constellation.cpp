#include "nope/constellation.hpp"

#include <cmath>
#include <stdexcept>

namespace nope {

std::string_view to_string(ConstellationName name) {
  switch (name) {
    case ConstellationName::BPSK: return "bpsk";
    case ConstellationName::QPSK: return "qpsk";
    case ConstellationName::QAM16: return "qam16";
    case ConstellationName::QAM64: return "qam64";
    case ConstellationName::QAM256: return "qam256";
  }
  return "?";
}

ConstellationName constellation_from_string(std::string_view token) {
  std::string t(token);
  for (auto& ch : t) ch = char(std::tolower(static_cast<unsigned char>(ch)));
  if (t == "bpsk") return ConstellationName::BPSK;
  if (t == "qpsk" || t == "qam4" || t == "4qam") return ConstellationName::QPSK;
  if (t == "qam16" || t == "16qam" || t == "16-qam") return ConstellationName::QAM16;
  if (t == "qam64" || t == "64qam" || t == "64-qam") return ConstellationName::QAM64;
  if (t == "qam256" || t == "256qam" || t == "256-qam") return ConstellationName::QAM256;
  throw std::invalid_argument("unsupported constellation: " + std::string(token));
}

namespace {

inline std::uint32_t gray(std::uint32_t i) { return i ^ (i >> 1); }

// Level index from a received coordinate on the odd-integer grid
// {-(n-1), ..., n-1}. Exact midpoints round down, which keeps Euclidean
// ties on the lower point index.
inline int slice_level(double coord, int n) {
  if (n == 1) return 0;
  const int idx = int(std::ceil((coord + double(n - 1)) / 2.0 - 0.5));
  return idx < 0 ? 0 : (idx >= n ? n - 1 : idx);
}

}  // namespace

Constellation make_constellation(ConstellationName name) {
  int i_bits = 0, q_bits = 0;
  switch (name) {
    case ConstellationName::BPSK: i_bits = 1; q_bits = 0; break;
    case ConstellationName::QPSK: i_bits = 1; q_bits = 1; break;
    case ConstellationName::QAM16: i_bits = 2; q_bits = 2; break;
    case ConstellationName::QAM64: i_bits = 3; q_bits = 3; break;
    case ConstellationName::QAM256: i_bits = 4; q_bits = 4; break;
  }

  Constellation c;
  c.name = name;
  c.bits_per_symbol = i_bits + q_bits;
  c.i_levels = 1 << i_bits;
  c.q_levels = 1 << q_bits;

  // Energy of the odd-integer grid, computed exactly on integers before the
  // single normalizing division.
  auto axis_energy = [](int n) {
    long long s = 0;
    for (int i = 0; i < n; ++i) {
      const long long level = 2 * i - (n - 1);
      s += level * level;
    }
    return double(s) / n;
  };
  const double raw_energy = axis_energy(c.i_levels) + (c.q_levels > 1 ? axis_energy(c.q_levels) : 0.0);
  c.scale = std::sqrt(raw_energy);

  const int count = c.i_levels * c.q_levels;
  c.points.resize(count);
  c.bits_of_symbol.resize(count);
  c.symbol_of_bits.resize(count);
  for (int ii = 0; ii < c.i_levels; ++ii) {
    for (int qi = 0; qi < c.q_levels; ++qi) {
      const int index = ii * c.q_levels + qi;
      const double re = (2 * ii - (c.i_levels - 1)) / c.scale;
      const double im = c.q_levels > 1 ? (2 * qi - (c.q_levels - 1)) / c.scale : 0.0;
      c.points[index] = {re, im};
      const std::uint32_t bits = (gray(std::uint32_t(ii)) << q_bits) | gray(std::uint32_t(qi));
      c.bits_of_symbol[index] = bits;
      c.symbol_of_bits[bits] = std::uint32_t(index);
    }
  }

  double e = 0.0;
  for (const auto& p : c.points) e += std::norm(p);
  c.energy = e / count;
  return c;
}

HardDecisions demap_hard(const VecC& z, const Constellation& c) {
  HardDecisions out;
  out.bits_per_symbol = c.bits_per_symbol;
  out.patterns.resize(size_t(z.size()));
  for (int u = 0; u < z.size(); ++u) {
    const int ii = slice_level(z[u].real() * c.scale, c.i_levels);
    const int qi = slice_level(z[u].imag() * c.scale, c.q_levels);
    out.patterns[size_t(u)] = c.bits_of_symbol[size_t(ii * c.q_levels + qi)];
  }
  return out;
}

VecC modulate(const std::vector<std::uint32_t>& patterns, const Constellation& c) {
  VecC x(patterns.size());
  for (size_t u = 0; u < patterns.size(); ++u) {
    if (patterns[u] >= c.symbol_of_bits.size())
      throw std::invalid_argument("modulate: bit pattern out of range");
    x[Eigen::Index(u)] = c.points[c.symbol_of_bits[patterns[u]]];
  }
  return x;
}

}  // namespace nope
