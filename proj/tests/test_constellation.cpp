#include <doctest.h>

#include <cmath>
#include <complex>

#include "nope/constellation.hpp"
#include "nope/rng.hpp"

using namespace nope;

namespace {

const ConstellationName kAll[] = {ConstellationName::BPSK, ConstellationName::QPSK,
                                  ConstellationName::QAM16, ConstellationName::QAM64,
                                  ConstellationName::QAM256};

// Exhaustive nearest-point search, ties toward the lower index.
std::uint32_t brute_force_demap(std::complex<double> z, const Constellation& c) {
  int best = 0;
  double best_d = std::norm(z - c.points[0]);
  for (int i = 1; i < int(c.points.size()); ++i) {
    const double d = std::norm(z - c.points[size_t(i)]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return c.bits_of_symbol[size_t(best)];
}

int popcount32(std::uint32_t v) { return int(__builtin_popcount(v)); }

}  // namespace

TEST_SUITE_BEGIN("constellation");

TEST_CASE("bpsk basics") {
  const Constellation c = make_constellation(ConstellationName::BPSK);
  REQUIRE(c.points.size() == 2);
  CHECK(c.points[0] == std::complex<double>(-1.0, 0.0));
  CHECK(c.points[1] == std::complex<double>(1.0, 0.0));
  CHECK(c.bits_per_symbol == 1);
  CHECK(c.energy == 1.0);
}

TEST_CASE("alphabets are unit energy, zero mean, complete") {
  for (const auto name : kAll) {
    CAPTURE(to_string(name));
    const Constellation c = make_constellation(name);
    CHECK(int(c.points.size()) == (1 << c.bits_per_symbol));
    CHECK(c.energy == doctest::Approx(1.0).epsilon(1e-13));

    // Every point has its exact negation in the set, so the mean is zero.
    for (const auto& p : c.points) {
      bool found = false;
      for (const auto& q : c.points)
        if (q.real() == -p.real() && q.imag() == -p.imag()) found = true;
      CHECK(found);
    }
    std::complex<double> sum = 0.0;
    for (const auto& p : c.points) sum += p;
    CHECK(std::abs(sum) < 1e-13);

    // gray_map is a bijection.
    std::vector<bool> seen(c.points.size(), false);
    for (const auto idx : c.symbol_of_bits) {
      CHECK(!seen[idx]);
      seen[idx] = true;
    }
    for (size_t i = 0; i < c.points.size(); ++i)
      CHECK(c.symbol_of_bits[c.bits_of_symbol[i]] == i);
  }
}

TEST_CASE("axis neighbors differ in exactly one bit") {
  for (const auto name : kAll) {
    CAPTURE(to_string(name));
    const Constellation c = make_constellation(name);
    for (int ii = 0; ii < c.i_levels; ++ii)
      for (int qi = 0; qi < c.q_levels; ++qi) {
        const std::uint32_t bits = c.bits_of_symbol[size_t(ii * c.q_levels + qi)];
        if (ii + 1 < c.i_levels) {
          const std::uint32_t right = c.bits_of_symbol[size_t((ii + 1) * c.q_levels + qi)];
          CHECK(popcount32(bits ^ right) == 1);
        }
        if (qi + 1 < c.q_levels) {
          const std::uint32_t up = c.bits_of_symbol[size_t(ii * c.q_levels + qi + 1)];
          CHECK(popcount32(bits ^ up) == 1);
        }
      }
  }
}

TEST_CASE("demap on exact points returns their bits") {
  for (const auto name : kAll) {
    const Constellation c = make_constellation(name);
    VecC z(Eigen::Index(c.points.size()));
    for (size_t i = 0; i < c.points.size(); ++i) z[Eigen::Index(i)] = c.points[i];
    const HardDecisions dec = demap_hard(z, c);
    for (size_t i = 0; i < c.points.size(); ++i)
      CHECK(dec.patterns[i] == c.bits_of_symbol[i]);
  }
}

TEST_CASE("bpsk ignores the imaginary part") {
  const Constellation c = make_constellation(ConstellationName::BPSK);
  VecC z(1);
  z[0] = std::complex<double>(0.3, 5.0);
  const HardDecisions dec = demap_hard(z, c);
  CHECK(dec.patterns[0] == c.bits_of_symbol[1]);  // +1
}

TEST_CASE("euclidean ties break toward the lower point index") {
  const Constellation c = make_constellation(ConstellationName::BPSK);
  VecC z(1);
  z[0] = 0.0;
  CHECK(demap_hard(z, c).patterns[0] == c.bits_of_symbol[0]);  // -1 has the lower index

  const Constellation q = make_constellation(ConstellationName::QPSK);
  z[0] = 0.0;
  CHECK(demap_hard(z, q).patterns[0] == q.bits_of_symbol[0]);
}

TEST_CASE("demap matches exhaustive search on random inputs") {
  Philox rng(17, 0);
  for (const auto name : kAll) {
    CAPTURE(to_string(name));
    const Constellation c = make_constellation(name);
    VecC z(1);
    for (int i = 0; i < 2000; ++i) {
      z[0] = std::complex<double>(4.0 * (rng.uniform() - 0.5), 4.0 * (rng.uniform() - 0.5));
      CHECK(demap_hard(z, c).patterns[0] == brute_force_demap(z[0], c));
    }
  }
}

TEST_CASE("modulate then demap is the identity") {
  for (const auto name : kAll) {
    const Constellation c = make_constellation(name);
    std::vector<std::uint32_t> patterns;
    for (std::uint32_t p = 0; p < c.symbol_of_bits.size(); ++p) patterns.push_back(p);
    const VecC x = modulate(patterns, c);
    const HardDecisions dec = demap_hard(x, c);
    for (size_t i = 0; i < patterns.size(); ++i) CHECK(dec.patterns[i] == patterns[i]);
  }
}

TEST_CASE("names round-trip and unknown names fail") {
  for (const auto name : kAll)
    CHECK(constellation_from_string(to_string(name)) == name);
  CHECK(constellation_from_string("16-QAM") == ConstellationName::QAM16);
  CHECK_THROWS_AS(constellation_from_string("pam8"), std::invalid_argument);
}

TEST_SUITE_END();
