#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nope/model.hpp"

namespace nope {

enum class ConstellationName { BPSK, QPSK, QAM16, QAM64, QAM256 };

std::string_view to_string(ConstellationName name);
ConstellationName constellation_from_string(std::string_view token);

/// Gray-mapped, zero-mean, unit-average-energy modulation alphabet.
///
/// For square QAM the first half of a bit pattern selects the in-phase level
/// and the second half the quadrature level, each through a reflected Gray
/// code; BPSK uses a single bit on the real axis. Bit k of a pattern is
/// (pattern >> (bits_per_symbol - 1 - k)) & 1.
struct Constellation {
  ConstellationName name;
  std::vector<std::complex<double>> points;  // index ordered by (I level, Q level)
  int bits_per_symbol = 0;
  std::vector<std::uint32_t> symbol_of_bits;  // bit pattern -> point index
  std::vector<std::uint32_t> bits_of_symbol;  // point index -> bit pattern
  double energy = 1.0;                        // mean |s|^2

  int i_levels = 0;   // levels on the in-phase axis
  int q_levels = 0;   // levels on the quadrature axis (1 for BPSK)
  double scale = 1.0; // odd-integer grid is divided by this
};

Constellation make_constellation(ConstellationName name);

/// Hard decisions for a block of users: one bit pattern per entry of z.
struct HardDecisions {
  int bits_per_symbol = 0;
  std::vector<std::uint32_t> patterns;

  int bit(int u, int k) const {
    return int((patterns[size_t(u)] >> (bits_per_symbol - 1 - k)) & 1u);
  }
};

/// Maps each entry of z to the nearest constellation point (Euclidean
/// distance, ties toward the lower point index) and returns its bits.
HardDecisions demap_hard(const VecC& z, const Constellation& c);

/// Bit patterns to symbols (inverse of demap_hard on clean points).
VecC modulate(const std::vector<std::uint32_t>& patterns, const Constellation& c);

}  // namespace nope
