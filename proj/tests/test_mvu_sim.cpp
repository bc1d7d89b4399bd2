#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "nope/mvu_sim.hpp"
#include "nope/rng.hpp"

using namespace nope;
using namespace nope::sim;

TEST_SUITE_BEGIN("mvu_sim");

namespace {

const SystemDims kDims{64, 16};

fxp::QuantizedInputs random_inputs(std::uint64_t seed, double y_scale = 2.0) {
  Philox rng(seed, 0);
  const auto h = generate_channel(kDims, rng);
  VecC y(64);
  for (int b = 0; b < 64; ++b) y[b] = rng.cgaussian(y_scale);
  return fxp::scale_and_quantize_inputs(h, y);
}

std::vector<fxp::QComplex> random_vec(int n, const fxp::QFormat& fmt, std::uint64_t seed,
                                      double span) {
  Philox rng(seed, 1);
  std::vector<fxp::QComplex> v;
  v.reserve(size_t(n));
  for (int i = 0; i < n; ++i)
    v.push_back(fxp::quantize_complex(span * (rng.uniform() - 0.5),
                                      span * (rng.uniform() - 0.5), fmt));
  return v;
}

// Identity stacked into all four blocks.
std::vector<fxp::QComplex> stacked_identity(const fxp::QFormat& fmt, bool first_block_only) {
  std::vector<fxp::QComplex> h(64 * 16, fxp::QComplex{fxp::QValue::zero(fmt), fxp::QValue::zero(fmt)});
  const fxp::QValue one((std::int64_t(1) << fmt.frac_bits) - 1, fmt);  // largest value < 1
  for (int m = 0; m < 4; ++m) {
    if (first_block_only && m > 0) break;
    for (int r = 0; r < 16; ++r) h[size_t(16 * m + r) * 16 + r] = {one, fxp::QValue::zero(fmt)};
  }
  return h;
}

int total_cycles(const std::vector<CycleReport>& reports) {
  int total = 0;
  for (const auto& r : reports) total += r.cycles;
  return total;
}

}  // namespace

TEST_CASE("layout round-trips bit-exactly") {
  const fxp::QFormat fmt{0, 10, true};

  // Identity block: after the row shift every 1 sits in stored column 0.
  const auto ident = stacked_identity(fmt, false);
  const BlockLayout li = layout_blocks(ident, kDims, fmt);
  for (int m = 0; m < 4; ++m)
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c)
        CHECK((li.stored[size_t(m)][size_t(r) * 16 + c].re.raw() != 0) == (c == 0));
  CHECK(unlayout(li) == ident);

  const auto in = random_inputs(21);
  const BlockLayout lr = layout_blocks(in);
  CHECK(unlayout(lr) == in.h);

  std::vector<fxp::QComplex> zeros(64 * 16,
                                   fxp::QComplex{fxp::QValue::zero(fmt), fxp::QValue::zero(fmt)});
  const BlockLayout lz = layout_blocks(zeros, kDims, fmt);
  CHECK(unlayout(lz) == zeros);

  CHECK_THROWS_AS(layout_blocks(zeros, SystemDims(32, 16), fmt), std::invalid_argument);
}

TEST_CASE("forward pass: identity blocks copy x, 16 cycles") {
  const fxp::FixedFormats fmts;
  const auto ident = stacked_identity(fmts.h, false);
  const BlockLayout layout = layout_blocks(ident, kDims, fmts.h);
  const auto x = random_vec(16, fmts.vec, 31, 4.0);

  bool sticky = false;
  const ForwardOut out = mvu_forward(layout, x, fmts, sticky);
  REQUIRE(out.acc.size() == 64);
  CHECK(out.report.size() == 1);
  CHECK(out.report[0].phase == Phase::Forward);
  CHECK(out.report[0].cycles == 16);
  // "one" is 1 - 2^-10, so outputs equal x scaled by it, exactly.
  for (int m = 0; m < 4; ++m)
    for (int r = 0; r < 16; ++r) {
      const auto& acc = out.acc[size_t(16 * m + r)];
      const __int128 expect_re = __int128(1023) * x[size_t(r)].re.raw();
      const __int128 expect_im = __int128(1023) * x[size_t(r)].im.raw();
      CHECK(acc.re.raw() == std::int64_t(expect_re >> 6));  // 20 -> 14 fraction bits
      CHECK(acc.im.raw() == std::int64_t(expect_im >> 6));
    }
}

TEST_CASE("forward pass: zero input gives zero") {
  const auto in = random_inputs(41);
  const BlockLayout layout = layout_blocks(in);
  std::vector<fxp::QComplex> x(16, fxp::QComplex{fxp::QValue::zero(in.fmts.vec),
                                                 fxp::QValue::zero(in.fmts.vec)});
  bool sticky = false;
  const ForwardOut out = mvu_forward(layout, x, in.fmts, sticky);
  for (const auto& acc : out.acc) {
    CHECK(acc.re.raw() == 0);
    CHECK(acc.im.raw() == 0);
  }
}

TEST_CASE("forward pass is bit-exact against the order-matched reference") {
  for (int rep = 0; rep < 200; ++rep) {
    const auto in = random_inputs(100 + std::uint64_t(rep));
    const BlockLayout layout = layout_blocks(in);
    const auto x = random_vec(16, in.fmts.vec, 500 + std::uint64_t(rep), 3.0);
    bool s1 = false, s2 = false;
    const ForwardOut sim_out = mvu_forward(layout, x, in.fmts, s1);
    const auto ref = fxp::kernel::forward_matvec(in, x, s2);
    REQUIRE(ref.size() == sim_out.acc.size());
    for (size_t i = 0; i < ref.size(); ++i) CHECK(sim_out.acc[i] == ref[i]);
    CHECK(s1 == s2);
  }
}

TEST_CASE("forward pass matches a naive rotated-order transcription") {
  const auto in = random_inputs(61);
  const BlockLayout layout = layout_blocks(in);
  const auto x = random_vec(16, in.fmts.vec, 62, 3.0);
  bool sticky = false;
  const ForwardOut sim_out = mvu_forward(layout, x, in.fmts, sticky);

  for (int row = 0; row < 64; ++row) {
    bool st = false;
    fxp::CAcc acc{fxp::QValue::zero(in.fmts.acc), fxp::QValue::zero(in.fmts.acc)};
    for (int c = 0; c < 16; ++c) {
      const int j = (row % 16 + c) % 16;
      acc = fxp::mac(acc, in.h[size_t(row) * 16 + j], x[size_t(j)], false, st);
    }
    CHECK(acc == sim_out.acc[size_t(row)]);
  }
}

TEST_CASE("adjoint pass: stacked identity selects the first block, 18 cycles") {
  const fxp::FixedFormats fmts;
  const auto first = stacked_identity(fmts.h, true);
  const BlockLayout layout = layout_blocks(first, kDims, fmts.h);
  const auto r = random_vec(64, fmts.vec, 71, 4.0);

  bool sticky = false;
  const AdjointOut out = mvu_adjoint(layout, r, fmts, sticky);
  REQUIRE(out.acc.size() == 16);
  CHECK(total_cycles(out.report) == 18);
  CHECK(out.report[0].phase == Phase::Adjoint);
  CHECK(out.report[0].cycles == 16);
  CHECK(out.report[1].phase == Phase::BlockAccumulate);
  CHECK(out.report[1].cycles == 2);
  for (int j = 0; j < 16; ++j) {
    const __int128 expect_re = __int128(1023) * r[size_t(j)].re.raw();
    const __int128 expect_im = __int128(1023) * r[size_t(j)].im.raw();
    CHECK(out.acc[size_t(j)].re.raw() == std::int64_t(expect_re >> 6));
    CHECK(out.acc[size_t(j)].im.raw() == std::int64_t(expect_im >> 6));
  }
}

TEST_CASE("adjoint pass is bit-exact against the fixed-tree reference") {
  for (int rep = 0; rep < 200; ++rep) {
    const auto in = random_inputs(200 + std::uint64_t(rep));
    const BlockLayout layout = layout_blocks(in);
    const auto r = random_vec(64, in.fmts.vec, 700 + std::uint64_t(rep), 3.0);
    bool s1 = false, s2 = false;
    const AdjointOut sim_out = mvu_adjoint(layout, r, in.fmts, s1);
    const auto ref = fxp::kernel::adjoint_matvec(in, r, s2);
    REQUIRE(ref.size() == sim_out.acc.size());
    for (size_t i = 0; i < ref.size(); ++i) CHECK(sim_out.acc[i] == ref[i]);
    CHECK(s1 == s2);
  }
}

TEST_CASE("adjoint pass matches a naive transcription with the exchange tree") {
  const auto in = random_inputs(81);
  const BlockLayout layout = layout_blocks(in);
  const auto r = random_vec(64, in.fmts.vec, 82, 3.0);
  bool sticky = false;
  const AdjointOut sim_out = mvu_adjoint(layout, r, in.fmts, sticky);

  const fxp::QFormat accf = in.fmts.acc;
  for (int j = 0; j < 16; ++j) {
    bool st = false;
    std::array<fxp::CAcc, 4> partial;
    for (int m = 0; m < 4; ++m) {
      fxp::CAcc acc{fxp::QValue::zero(accf), fxp::QValue::zero(accf)};
      for (int c = 0; c < 16; ++c) {
        const int b_local = (j - c + 16) % 16;
        acc = fxp::mac(acc, in.h[size_t(16 * m + b_local) * 16 + j],
                       r[size_t(16 * m + b_local)], true, st);
      }
      partial[size_t(m)] = acc;
    }
    const auto add = [&](const fxp::CAcc& a, const fxp::CAcc& b) {
      return fxp::CAcc{fxp::add_to(a.re, b.re, accf, st), fxp::add_to(a.im, b.im, accf, st)};
    };
    const fxp::CAcc expect = add(add(partial[2], partial[3]), add(partial[1], partial[0]));
    CHECK(expect == sim_out.acc[size_t(j)]);
  }
}

TEST_CASE("cannon schedule touches every matrix element exactly once per phase") {
  const auto in = random_inputs(91);
  const BlockLayout layout = layout_blocks(in);
  const auto x = random_vec(16, in.fmts.vec, 92, 2.0);
  const auto r = random_vec(64, in.fmts.vec, 93, 2.0);

  bool sticky = false;
  AccessLog log;
  mvu_forward(layout, x, in.fmts, sticky, nullptr, &log);
  mvu_adjoint(layout, r, in.fmts, sticky, nullptr, &log);

  std::map<Phase, std::set<std::tuple<int, int, int>>> seen;
  std::map<Phase, int> count;
  for (const auto& t : log.touches) {
    seen[t.phase].insert({t.block, t.row, t.col});
    ++count[t.phase];
  }
  CHECK(count[Phase::Forward] == 4 * 16 * 16);
  CHECK(int(seen[Phase::Forward].size()) == 4 * 16 * 16);
  CHECK(count[Phase::Adjoint] == 4 * 16 * 16);
  CHECK(int(seen[Phase::Adjoint].size()) == 4 * 16 * 16);
}

TEST_CASE("estimation unit: zero z clamps every gain to zero, 16+16 cycles") {
  const auto in = random_inputs(101);
  bool sticky = false;
  const auto gains = fxp::estimate_gains_fixed(in, sticky);
  std::vector<fxp::QComplex> z(16, fxp::QComplex{fxp::QValue::zero(in.fmts.vec),
                                                 fxp::QValue::zero(in.fmts.vec)});
  const fxp::QValue v_r = fxp::quantize(0.5, in.fmts.stat);
  const EuOut out = eu_schedule(z, gains, v_r, kDims, in.fmts, sticky);
  CHECK(total_cycles(out.report) == 32);
  CHECK(out.report[0].phase == Phase::EuNorms);
  CHECK(out.report[0].cycles == 16);
  CHECK(out.report[1].phase == Phase::EuAlpha);
  CHECK(out.report[1].cycles == 16);
  CHECK(out.v_z_re.raw() == 0);
  CHECK(out.v_z_im.raw() == 0);
  for (int u = 0; u < 16; ++u) {
    CHECK(out.alpha_re[size_t(u)].raw() == 0);
    CHECK(out.alpha_im[size_t(u)].raw() == 0);
  }
}

TEST_CASE("estimation unit matches a scalar transcription of the update") {
  const auto in = random_inputs(111);
  bool sticky = false;
  const auto gains = fxp::estimate_gains_fixed(in, sticky);

  // Single active user.
  std::vector<fxp::QComplex> z(16, fxp::QComplex{fxp::QValue::zero(in.fmts.vec),
                                                 fxp::QValue::zero(in.fmts.vec)});
  z[3] = fxp::quantize_complex(0.8, -0.4, in.fmts.vec);
  const fxp::QValue v_r = fxp::quantize(0.05, in.fmts.stat);

  const EuOut out = eu_schedule(z, gains, v_r, kDims, in.fmts, sticky);

  // Double-precision transcription of the same lines.
  const double d2 = gains.d2[3].to_double();
  const double d2_mean = gains.d2_mean.to_double();
  const double vr = v_r.to_double();
  const double v_z_re = d2 * 0.8 * 0.8;
  const double v_z_im = d2 * 0.4 * 0.4;
  const double kk = 1.0 / (vr * d2_mean);
  const double s_re = std::max(kk * d2 * (out.v_z_re.to_double() - vr), 0.0);
  const double s_im = std::max(kk * d2 * (out.v_z_im.to_double() - vr), 0.0);

  CHECK(out.v_z_re.to_double() == doctest::Approx(v_z_re).epsilon(0.02));
  CHECK(out.v_z_im.to_double() == doctest::Approx(v_z_im).epsilon(0.02));
  CHECK(out.k.to_double() == doctest::Approx(kk).epsilon(0.02));
  CHECK(out.alpha_re[3].to_double() == doctest::Approx(s_re / (1 + s_re)).epsilon(0.05));
  CHECK(out.alpha_im[3].to_double() == doctest::Approx(s_im / (1 + s_im)).epsilon(0.05));
  CHECK(out.x_next[3].re.to_double() ==
        doctest::Approx(out.alpha_re[3].to_double() * 0.8).epsilon(0.01));
  const double rho = (2.0 * 64 / kDims.beta()) * kk * d2_mean * d2;
  const double rho_got = out.rho[3].to_double();
  const double rho_expect = std::min(rho, fxp::QFormat{12, 12, true}.max_raw() *
                                              fxp::QFormat{12, 12, true}.lsb());
  CHECK(rho_got == doctest::Approx(rho_expect).epsilon(0.05));
}

TEST_CASE("interleaved execution is bit-identical to solo and to the kernel path") {
  for (int rep = 0; rep < 20; ++rep) {
    const auto in_a = random_inputs(300 + std::uint64_t(rep));
    const auto in_b = random_inputs(400 + std::uint64_t(rep));
    const Problem pa = make_problem(in_a);
    const Problem pb = make_problem(in_b);
    const int t_max = 4;

    const InterleavedOut dual = run_interleaved(pa, pb, t_max);
    const SoloOut solo_a = run_solo(pa, t_max);
    const SoloOut solo_b = run_solo(pb, t_max);

    CHECK(dual.state[0].z == solo_a.state.z);
    CHECK(dual.state[0].x == solo_a.state.x);
    CHECK(dual.state[0].r == solo_a.state.r);
    CHECK(dual.state[0].alpha_re == solo_a.state.alpha_re);
    CHECK(dual.state[1].z == solo_b.state.z);
    CHECK(dual.state[1].x == solo_b.state.x);

    // The straight-line fixed-point path computes the same states.
    bool sticky = false;
    const auto gains = fxp::estimate_gains_fixed(in_a, sticky);
    fxp::FixedIterState st = fxp::fixed_initial_state(in_a);
    for (int t = 0; t < t_max; ++t) fxp::fixed_iterate(st, in_a, gains, sticky);
    CHECK(st.z == dual.state[0].z);
    CHECK(st.x == dual.state[0].x);
    CHECK(st.v_r == dual.state[0].v_r);
    CHECK(st.v_z_re == dual.state[0].v_z_re);
    CHECK(st.v_z_im == dual.state[0].v_z_im);
    CHECK(st.k == dual.state[0].k);
    CHECK(st.rho == dual.state[0].rho);
    CHECK(st.alpha_mean == dual.state[0].alpha_mean);
  }
}

TEST_CASE("identical problems produce identical interleaved outputs") {
  const auto in = random_inputs(501);
  const Problem p = make_problem(in);
  const InterleavedOut dual = run_interleaved(p, p, 3);
  CHECK(dual.state[0].z == dual.state[1].z);
  CHECK(dual.state[0].x == dual.state[1].x);
}

TEST_CASE("pipeline schedule: slot budgets, fill cost, and no gaps") {
  const auto in_a = random_inputs(601);
  const auto in_b = random_inputs(602);
  const Problem pa = make_problem(in_a);
  const Problem pb = make_problem(in_b);
  const int t_max = 5;

  Trace trace;
  const InterleavedOut dual = run_interleaved(pa, pb, t_max, &trace);
  const SoloOut solo = run_solo(pa, t_max);

  // Both units are allotted the same slot budget; the estimation unit is
  // busy 32 of the 34 cycles and synchronizes for the final two.
  CHECK(dual.stats.slot_cycles == 34);
  CHECK(dual.stats.mvu_busy_per_slot == 34);
  CHECK(dual.stats.eu_busy_per_slot == 32);
  CHECK(dual.stats.slots == 2 * t_max + 1);
  CHECK(dual.stats.total_cycles == long(2 * t_max + 1) * 34);

  // Two interleaved problems cost the solo time plus one pipeline-fill slot.
  CHECK(dual.stats.total_cycles == solo.stats.total_cycles + dual.stats.slot_cycles);

  // After the fill slot neither unit has an idle slot until its drain.
  std::map<std::string, std::set<long>> busy_slots;
  for (const auto& line : trace.lines)
    if (line.phase != Phase::Idle) busy_slots[line.unit].insert(line.cycle / 34);
  for (const auto& [unit, slots] : busy_slots) {
    REQUIRE(!slots.empty());
    const long lo = *slots.begin(), hi = *slots.rbegin();
    CHECK(long(slots.size()) == hi - lo + 1);  // contiguous occupancy
  }

  // One line per cycle per unit.
  std::map<std::pair<long, std::string>, int> per_cycle;
  for (const auto& line : trace.lines) ++per_cycle[{line.cycle, line.unit}];
  for (const auto& [key, n] : per_cycle) CHECK(n == 1);
  CHECK(long(per_cycle.size()) == 2 * dual.stats.total_cycles);

  // Trace grammar: "<cycle> <unit> <problem> <phase> <op>", sorted by cycle.
  std::istringstream text(trace.to_text());
  std::string line;
  long prev_cycle = -1;
  int tokens_ok = 0;
  while (std::getline(text, line)) {
    std::istringstream ls(line);
    long cycle;
    std::string unit, problem, phase, op;
    REQUIRE((ls >> cycle >> unit >> problem >> phase >> op));
    CHECK(cycle >= prev_cycle);
    prev_cycle = cycle;
    ++tokens_ok;
  }
  CHECK(tokens_ok == int(trace.lines.size()));
}

TEST_SUITE_END();
