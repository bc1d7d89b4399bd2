#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "nope/nope_fixed.hpp"

namespace nope::sim {

using fxp::CAcc;
using fxp::FixedFormats;
using fxp::FixedIterState;
using fxp::QComplex;
using fxp::QFormat;
using fxp::QuantizedGains;
using fxp::QuantizedInputs;
using fxp::QValue;

enum class Phase { Forward, Adjoint, BlockAccumulate, EuNorms, EuAlpha, Sync, Idle };
std::string_view to_string(Phase phase);

struct CycleReport {
  Phase phase = Phase::Idle;
  int cycles = 0;
  int interleaved_problems = 1;
};

/// Line-oriented cycle trace: `cycle unit problem phase op`, unit in
/// {mvu, eu}, problem p0/p1 or "-" when the unit is idle.
struct Trace {
  struct Line {
    long cycle = 0;
    std::string unit;
    int problem = -1;  // -1 renders as "-"
    Phase phase = Phase::Idle;
    std::string op;
  };
  std::vector<Line> lines;

  void emit(long cycle, std::string_view unit, int problem, Phase phase, std::string_view op);
  /// Lines sorted by (cycle, unit), formatted one per line.
  std::string to_text() const;
};

/// Matrix element touches (phase, block, row, original column); used by the
/// schedule coverage checks.
struct AccessLog {
  struct Touch {
    Phase phase;
    int block, row, col;
  };
  std::vector<Touch> touches;
};

/// The 64x16 channel stored as four 16x16 blocks with row r cyclically
/// shifted left by r: stored[r][c] = block[r][(c + r) % 16]. This lets both
/// the pre-shift (forward) and post-shift (adjoint) schedules stream one
/// stored column per cycle without access contention.
struct BlockLayout {
  static constexpr int kBlockDim = 16;
  QFormat fmt;
  std::array<std::vector<QComplex>, 4> stored;  // each 16x16 row-major
};

/// Requires exactly 64x16 input (row-major h).
BlockLayout layout_blocks(const std::vector<QComplex>& h, const SystemDims& dims, QFormat fmt);
BlockLayout layout_blocks(const QuantizedInputs& in);

/// Inverse of layout_blocks; bit-exact round trip.
std::vector<QComplex> unlayout(const BlockLayout& layout);

struct ForwardOut {
  std::vector<CAcc> acc;  // 64 accumulators, blocks stacked
  std::vector<CycleReport> report;
};

/// Cycle simulation of H*x: x loaded into the input ring, rotated once per
/// cycle while all 64 MAC lanes consume one stored column; 16 cycles.
ForwardOut mvu_forward(const BlockLayout& layout, const std::vector<QComplex>& x,
                       const FixedFormats& fmts, bool& sticky, Trace* trace = nullptr,
                       AccessLog* log = nullptr, long cycle0 = 0, int problem = 0,
                       int interleaved_problems = 1);

struct AdjointOut {
  std::vector<CAcc> acc;  // 16 accumulators (final unit)
  std::vector<CycleReport> report;
};

/// Cycle simulation of H^H r: static inputs, rotating output accumulators
/// (16 cycles), then the two-cycle block exchange -- unit 2 absorbs unit 1
/// and unit 3 absorbs unit 4, then unit 3 absorbs unit 2; 18 cycles total.
AdjointOut mvu_adjoint(const BlockLayout& layout, const std::vector<QComplex>& r,
                       const FixedFormats& fmts, bool& sticky, Trace* trace = nullptr,
                       AccessLog* log = nullptr, long cycle0 = 0, int problem = 0,
                       int interleaved_problems = 1);

struct EuOut {
  QValue v_z_re, v_z_im, k, alpha_mean;
  std::vector<QValue> alpha_re, alpha_im, rho;
  std::vector<QComplex> x_next;
  bool frozen = false;  // residual energy quantized to zero; x and rho hold
  std::vector<CycleReport> report;
};

/// Cycle simulation of the estimation unit: 16 cycles of the two norm MAC
/// units, then 16 cycles of per-user denoiser updates through the
/// reciprocal unit.
EuOut eu_schedule(const std::vector<QComplex>& z, const QuantizedGains& gains, QValue v_r,
                  const SystemDims& dims, const FixedFormats& fmts, bool& sticky,
                  Trace* trace = nullptr, long cycle0 = 0, int problem = 0,
                  int interleaved_problems = 1);

/// One equalization problem prepared for the simulator.
struct Problem {
  BlockLayout layout;
  std::vector<QComplex> y;
  FixedFormats fmts;
};
Problem make_problem(const QuantizedInputs& in);

struct ScheduleStats {
  long slot_cycles = 0;   // cycles per pipeline slot
  int slots = 0;
  long total_cycles = 0;
  long mvu_busy_per_slot = 0;
  long eu_busy_per_slot = 0;  // excludes the sync cycles
};

struct SoloOut {
  FixedIterState state;
  bool sticky = false;
  ScheduleStats stats;
};

struct InterleavedOut {
  std::array<FixedIterState, 2> state;
  std::array<bool, 2> sticky{};
  ScheduleStats stats;
};

/// Runs one problem through the cycle-level pipeline (matrix-vector unit and
/// estimation unit strictly alternating).
SoloOut run_solo(const Problem& p, int t_max, Trace* trace = nullptr);

/// Runs two independent problems with coarse-grained pipeline interleaving:
/// while one occupies the matrix-vector unit the other occupies the
/// estimation unit. Numerical results are bit-identical to solo execution.
InterleavedOut run_interleaved(const Problem& a, const Problem& b, int t_max,
                               Trace* trace = nullptr);

}  // namespace nope::sim
