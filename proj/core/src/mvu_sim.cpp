#include "nope/mvu_sim.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace nope::sim {

namespace k = fxp::kernel;

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Forward: return "forward";
    case Phase::Adjoint: return "adjoint";
    case Phase::BlockAccumulate: return "block-accumulate";
    case Phase::EuNorms: return "eu-norms";
    case Phase::EuAlpha: return "eu-alpha";
    case Phase::Sync: return "sync";
    case Phase::Idle: return "idle";
  }
  return "?";
}

void Trace::emit(long cycle, std::string_view unit, int problem, Phase phase,
                 std::string_view op) {
  lines.push_back({cycle, std::string(unit), problem, phase, std::string(op)});
}

std::string Trace::to_text() const {
  std::vector<const Line*> order;
  order.reserve(lines.size());
  for (const auto& l : lines) order.push_back(&l);
  std::stable_sort(order.begin(), order.end(), [](const Line* a, const Line* b) {
    if (a->cycle != b->cycle) return a->cycle < b->cycle;
    return a->unit < b->unit;  // eu before mvu within a cycle
  });
  std::ostringstream os;
  for (const Line* l : order) {
    os << l->cycle << ' ' << l->unit << ' ';
    if (l->problem < 0)
      os << '-';
    else
      os << 'p' << l->problem;
    os << ' ' << to_string(l->phase) << ' ' << l->op << '\n';
  }
  return os.str();
}

BlockLayout layout_blocks(const std::vector<QComplex>& h, const SystemDims& dims, QFormat fmt) {
  constexpr int n = BlockLayout::kBlockDim;
  if (dims.rx_antennas != 4 * n || dims.users != n)
    throw std::invalid_argument("layout_blocks: dimensions must be 64x16");
  if (h.size() != size_t(dims.rx_antennas) * size_t(dims.users))
    throw std::invalid_argument("layout_blocks: wrong element count");
  BlockLayout layout;
  layout.fmt = fmt;
  for (int m = 0; m < 4; ++m) {
    auto& blk = layout.stored[size_t(m)];
    blk.resize(size_t(n) * n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        blk[size_t(r) * n + c] = h[size_t(n * m + r) * n + (c + r) % n];
  }
  return layout;
}

BlockLayout layout_blocks(const QuantizedInputs& in) {
  return layout_blocks(in.h, in.dims, in.fmts.h);
}

std::vector<QComplex> unlayout(const BlockLayout& layout) {
  constexpr int n = BlockLayout::kBlockDim;
  std::vector<QComplex> h(size_t(4 * n) * n);
  for (int m = 0; m < 4; ++m)
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < n; ++j)
        h[size_t(n * m + r) * n + j] = layout.stored[size_t(m)][size_t(r) * n + (j - r + n) % n];
  return h;
}

ForwardOut mvu_forward(const BlockLayout& layout, const std::vector<QComplex>& x,
                       const FixedFormats& fmts, bool& sticky, Trace* trace, AccessLog* log,
                       long cycle0, int problem, int interleaved_problems) {
  constexpr int n = BlockLayout::kBlockDim;
  if (x.size() != n) throw std::invalid_argument("mvu_forward: x must have 16 entries");

  std::array<QComplex, n> ring;
  for (int i = 0; i < n; ++i) ring[size_t(i)] = x[size_t(i)];

  ForwardOut out;
  out.acc.assign(size_t(4 * n), CAcc{QValue::zero(fmts.acc), QValue::zero(fmts.acc)});
  for (int c = 0; c < n; ++c) {
    for (int m = 0; m < 4; ++m) {
      for (int lane = 0; lane < n; ++lane) {
        CAcc& acc = out.acc[size_t(n * m + lane)];
        acc = fxp::mac(acc, layout.stored[size_t(m)][size_t(lane) * n + c], ring[size_t(lane)],
                       /*conj_a=*/false, sticky);
        if (log) log->touches.push_back({Phase::Forward, m, lane, (lane + c) % n});
      }
    }
    // Pre-shift: every register takes its upper neighbour's value.
    const QComplex head = ring[0];
    for (int i = 0; i < n - 1; ++i) ring[size_t(i)] = ring[size_t(i) + 1];
    ring[n - 1] = head;
    if (trace) trace->emit(cycle0 + c, "mvu", problem, Phase::Forward, "mac");
  }
  out.report.push_back({Phase::Forward, n, interleaved_problems});
  return out;
}

AdjointOut mvu_adjoint(const BlockLayout& layout, const std::vector<QComplex>& r,
                       const FixedFormats& fmts, bool& sticky, Trace* trace, AccessLog* log,
                       long cycle0, int problem, int interleaved_problems) {
  constexpr int n = BlockLayout::kBlockDim;
  if (r.size() != size_t(4 * n)) throw std::invalid_argument("mvu_adjoint: r must have 64 entries");

  std::array<std::array<CAcc, n>, 4> acc;
  for (auto& blk : acc) blk.fill(CAcc{QValue::zero(fmts.acc), QValue::zero(fmts.acc)});

  for (int c = 0; c < n; ++c) {
    for (int m = 0; m < 4; ++m) {
      for (int lane = 0; lane < n; ++lane) {
        // Static inputs; the accumulator at this lane currently belongs to
        // output (lane + c) % 16.
        acc[size_t(m)][size_t(lane)] =
            fxp::mac(acc[size_t(m)][size_t(lane)], layout.stored[size_t(m)][size_t(lane) * n + c],
                     r[size_t(n * m + lane)], /*conj_a=*/true, sticky);
        if (log) log->touches.push_back({Phase::Adjoint, m, lane, (lane + c) % n});
      }
      // Post-shift: accumulators rotate toward lower lanes.
      auto& blk = acc[size_t(m)];
      const CAcc head = blk[0];
      for (int i = 0; i < n - 1; ++i) blk[size_t(i)] = blk[size_t(i) + 1];
      blk[n - 1] = head;
    }
    if (trace) trace->emit(cycle0 + c, "mvu", problem, Phase::Adjoint, "mac");
  }

  // Exchange cycle 1: unit 2 absorbs unit 1, unit 3 absorbs unit 4.
  for (int j = 0; j < n; ++j) {
    acc[1][size_t(j)] = {fxp::add_to(acc[1][size_t(j)].re, acc[0][size_t(j)].re, fmts.acc, sticky),
                         fxp::add_to(acc[1][size_t(j)].im, acc[0][size_t(j)].im, fmts.acc, sticky)};
    acc[2][size_t(j)] = {fxp::add_to(acc[2][size_t(j)].re, acc[3][size_t(j)].re, fmts.acc, sticky),
                         fxp::add_to(acc[2][size_t(j)].im, acc[3][size_t(j)].im, fmts.acc, sticky)};
  }
  if (trace) trace->emit(cycle0 + n, "mvu", problem, Phase::BlockAccumulate, "xfer");
  // Exchange cycle 2: unit 3 absorbs unit 2.
  for (int j = 0; j < n; ++j)
    acc[2][size_t(j)] = {fxp::add_to(acc[2][size_t(j)].re, acc[1][size_t(j)].re, fmts.acc, sticky),
                         fxp::add_to(acc[2][size_t(j)].im, acc[1][size_t(j)].im, fmts.acc, sticky)};
  if (trace) trace->emit(cycle0 + n + 1, "mvu", problem, Phase::BlockAccumulate, "xfer");

  AdjointOut out;
  out.acc.assign(acc[2].begin(), acc[2].end());
  out.report.push_back({Phase::Adjoint, n, interleaved_problems});
  out.report.push_back({Phase::BlockAccumulate, 2, interleaved_problems});
  return out;
}

EuOut eu_schedule(const std::vector<QComplex>& z, const QuantizedGains& gains, QValue v_r,
                  const SystemDims& dims, const FixedFormats& fmts, bool& sticky, Trace* trace,
                  long cycle0, int problem, int interleaved_problems) {
  const int n = dims.users;
  if (int(z.size()) != n || int(gains.d2.size()) != n)
    throw std::invalid_argument("eu_schedule: z and gains must have U entries");

  EuOut out;
  CAcc vz{QValue::zero(fmts.acc), QValue::zero(fmts.acc)};
  for (int u = 0; u < n; ++u) {
    vz = k::vz_accumulate(vz, z[size_t(u)], gains.d2[size_t(u)], fmts, sticky);
    if (trace) trace->emit(cycle0 + u, "eu", problem, Phase::EuNorms, "mac");
  }
  out.v_z_re = fxp::convert(vz.re, fmts.stat, sticky);
  out.v_z_im = fxp::convert(vz.im, fmts.stat, sticky);

  const QValue k_denom = fxp::mul_to(v_r, gains.d2_mean, fmts.stat, sticky);
  out.frozen = v_r.raw() == 0 || k_denom.raw() == 0;
  out.alpha_re.assign(size_t(n), QValue::zero(fmts.alpha));
  out.alpha_im.assign(size_t(n), QValue::zero(fmts.alpha));
  out.rho.assign(size_t(n), QValue::zero(fmts.stat));
  out.x_next.assign(size_t(n), QComplex{QValue::zero(fmts.vec), QValue::zero(fmts.vec)});
  out.k = QValue::zero(fmts.stat);
  out.alpha_mean = QValue::zero(fmts.stat);

  if (!out.frozen) {
    out.k = fxp::reciprocal_pos(k_denom, fmts.stat, sticky);
    const QValue rho_coeff = fxp::quantize(2.0 * dims.rx_antennas / dims.beta(), fmts.stat);
    const QValue rho_base = fxp::mul_to(fxp::mul_to(rho_coeff, out.k, fmts.stat, sticky),
                                        gains.d2_mean, fmts.stat, sticky);
    std::int64_t alpha_sum_raw = 0;
    for (int u = 0; u < n; ++u) {
      const k::EuUserOut o = k::eu_user_step(z[size_t(u)], gains.d2[size_t(u)], out.v_z_re,
                                             out.v_z_im, v_r, out.k, rho_base, fmts, sticky);
      out.alpha_re[size_t(u)] = o.alpha_re;
      out.alpha_im[size_t(u)] = o.alpha_im;
      out.x_next[size_t(u)] = o.x_next;
      out.rho[size_t(u)] = o.rho;
      alpha_sum_raw += o.alpha_re.raw() + o.alpha_im.raw();
      if (trace) trace->emit(cycle0 + n + u, "eu", problem, Phase::EuAlpha, "alpha");
    }
    const QValue alpha_sum(alpha_sum_raw, QFormat{20, fmts.alpha.frac_bits, true});
    out.alpha_mean =
        fxp::mul_to(alpha_sum, fxp::quantize(1.0 / n, fmts.stat), fmts.stat, sticky);
  } else {
    for (int u = 0; u < n; ++u)
      if (trace) trace->emit(cycle0 + n + u, "eu", problem, Phase::EuAlpha, "alpha");
  }

  out.report.push_back({Phase::EuNorms, n, interleaved_problems});
  out.report.push_back({Phase::EuAlpha, n, interleaved_problems});
  return out;
}

Problem make_problem(const QuantizedInputs& in) {
  return Problem{layout_blocks(in), in.y, in.fmts};
}

namespace {

constexpr long kSlotCycles = 34;  // 16 forward + 16 adjoint + 2 exchange
constexpr int kDim = BlockLayout::kBlockDim;

struct Lane {
  const Problem* p = nullptr;
  SystemDims dims{4 * kDim, kDim};
  QuantizedGains gains;
  QValue beta_half;
  FixedIterState st;
  bool sticky = false;
};

Lane make_lane(const Problem& p) {
  Lane lane;
  lane.p = &p;
  QuantizedInputs in;
  in.dims = lane.dims;
  in.h = unlayout(p.layout);
  in.y = p.y;
  in.fmts = p.fmts;
  if (p.y.size() != size_t(lane.dims.rx_antennas))
    throw std::invalid_argument("run: y must have 64 entries");
  lane.gains = estimate_gains_fixed(in, lane.sticky);
  lane.beta_half = fxp::quantize(lane.dims.beta() / 2.0, p.fmts.stat);
  lane.st = fxp::fixed_initial_state(in);
  return lane;
}

void mvu_stage(Lane& lane, long base, int problem, int problems, Trace* trace) {
  const FixedFormats& f = lane.p->fmts;
  const QValue onsager = fxp::mul_to(lane.beta_half, lane.st.alpha_mean, f.stat, lane.sticky);
  ForwardOut fwd = mvu_forward(lane.p->layout, lane.st.x, f, lane.sticky, trace, nullptr, base,
                               problem, problems);
  for (int b = 0; b < lane.dims.rx_antennas; ++b)
    lane.st.r[size_t(b)] = k::residual_entry(lane.p->y[size_t(b)], fwd.acc[size_t(b)],
                                             lane.st.r[size_t(b)], onsager, f, lane.sticky);
  lane.st.v_r = k::vr_statistic(lane.st.r, lane.beta_half, f, lane.sticky);
  AdjointOut adj = mvu_adjoint(lane.p->layout, lane.st.r, f, lane.sticky, trace, nullptr,
                               base + kDim, problem, problems);
  for (int u = 0; u < lane.dims.users; ++u)
    lane.st.z[size_t(u)] = k::z_entry(lane.st.x[size_t(u)], adj.acc[size_t(u)],
                                      lane.gains.d2_inv[size_t(u)], f, lane.sticky);
}

void eu_stage(Lane& lane, long base, int problem, int problems, Trace* trace) {
  const FixedFormats& f = lane.p->fmts;
  EuOut eu = eu_schedule(lane.st.z, lane.gains, lane.st.v_r, lane.dims, f, lane.sticky, trace,
                         base, problem, problems);
  lane.st.v_z_re = eu.v_z_re;
  lane.st.v_z_im = eu.v_z_im;
  lane.st.k = eu.k;
  lane.st.alpha_re = eu.alpha_re;
  lane.st.alpha_im = eu.alpha_im;
  lane.st.alpha_mean = eu.alpha_mean;
  if (!eu.frozen) {
    lane.st.x = eu.x_next;
    lane.st.rho = eu.rho;
  }
  ++lane.st.t;
  if (trace) {
    trace->emit(base + 2 * kDim, "eu", problem, Phase::Sync, "stall");
    trace->emit(base + 2 * kDim + 1, "eu", problem, Phase::Sync, "stall");
  }
}

void idle_unit(Trace* trace, std::string_view unit, long base) {
  if (!trace) return;
  for (long c = 0; c < kSlotCycles; ++c) trace->emit(base + c, unit, -1, Phase::Idle, "idle");
}

ScheduleStats run_schedule(std::vector<Lane>& lanes, int t_max, Trace* trace) {
  const int p_count = int(lanes.size());
  const int mvu_jobs = p_count * t_max;
  const int slots = p_count == 1 ? 2 * t_max : 2 * t_max + 1;
  for (int s = 0; s < slots; ++s) {
    const long base = long(s) * kSlotCycles;
    int mvu_p = -1, eu_p = -1;
    if (p_count == 1) {
      if (s % 2 == 0 && s / 2 < t_max) mvu_p = 0;
      if (s % 2 == 1) eu_p = 0;
    } else {
      if (s < mvu_jobs) mvu_p = s % 2;
      if (s >= 1 && s - 1 < mvu_jobs) eu_p = (s - 1) % 2;
    }
    if (mvu_p >= 0)
      mvu_stage(lanes[size_t(mvu_p)], base, mvu_p, p_count, trace);
    else
      idle_unit(trace, "mvu", base);
    if (eu_p >= 0)
      eu_stage(lanes[size_t(eu_p)], base, eu_p, p_count, trace);
    else
      idle_unit(trace, "eu", base);
  }
  ScheduleStats stats;
  stats.slot_cycles = kSlotCycles;
  stats.slots = slots;
  stats.total_cycles = long(slots) * kSlotCycles;
  stats.mvu_busy_per_slot = kSlotCycles;
  stats.eu_busy_per_slot = 2 * kDim;
  return stats;
}

}  // namespace

SoloOut run_solo(const Problem& p, int t_max, Trace* trace) {
  if (t_max < 1) throw std::invalid_argument("run_solo: t_max must be >= 1");
  std::vector<Lane> lanes;
  lanes.push_back(make_lane(p));
  SoloOut out;
  out.stats = run_schedule(lanes, t_max, trace);
  out.state = std::move(lanes[0].st);
  out.sticky = lanes[0].sticky;
  return out;
}

InterleavedOut run_interleaved(const Problem& a, const Problem& b, int t_max, Trace* trace) {
  if (t_max < 1) throw std::invalid_argument("run_interleaved: t_max must be >= 1");
  std::vector<Lane> lanes;
  lanes.push_back(make_lane(a));
  lanes.push_back(make_lane(b));
  InterleavedOut out;
  out.stats = run_schedule(lanes, t_max, trace);
  out.state[0] = std::move(lanes[0].st);
  out.state[1] = std::move(lanes[1].st);
  out.sticky[0] = lanes[0].sticky;
  out.sticky[1] = lanes[1].sticky;
  return out;
}

}  // namespace nope::sim
