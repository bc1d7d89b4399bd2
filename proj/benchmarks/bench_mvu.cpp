#include <benchmark/benchmark.h>

#include "nope/mvu_sim.hpp"
#include "nope/rng.hpp"

namespace {

using namespace nope;

fxp::QuantizedInputs make_inputs() {
  Philox rng(77, 0);
  const SystemDims dims(64, 16);
  const ChannelMatrix h = generate_channel(dims, rng);
  VecC y(64);
  for (int b = 0; b < 64; ++b) y[b] = rng.cgaussian(0.5);
  return fxp::scale_and_quantize_inputs(h, y);
}

void BM_MvuForward(benchmark::State& state) {
  const auto in = make_inputs();
  const sim::BlockLayout layout = sim::layout_blocks(in);
  std::vector<fxp::QComplex> x(16, fxp::QComplex{fxp::QValue::zero(in.fmts.vec),
                                                 fxp::QValue::zero(in.fmts.vec)});
  Philox rng(78, 0);
  for (auto& e : x) e = fxp::quantize_complex(rng.uniform() - 0.5, rng.uniform() - 0.5, in.fmts.vec);
  bool sticky = false;
  for (auto _ : state) benchmark::DoNotOptimize(sim::mvu_forward(layout, x, in.fmts, sticky).acc);
}
BENCHMARK(BM_MvuForward);

void BM_MvuAdjoint(benchmark::State& state) {
  const auto in = make_inputs();
  const sim::BlockLayout layout = sim::layout_blocks(in);
  std::vector<fxp::QComplex> r(64, fxp::QComplex{fxp::QValue::zero(in.fmts.vec),
                                                 fxp::QValue::zero(in.fmts.vec)});
  Philox rng(79, 0);
  for (auto& e : r) e = fxp::quantize_complex(rng.uniform() - 0.5, rng.uniform() - 0.5, in.fmts.vec);
  bool sticky = false;
  for (auto _ : state) benchmark::DoNotOptimize(sim::mvu_adjoint(layout, r, in.fmts, sticky).acc);
}
BENCHMARK(BM_MvuAdjoint);

void BM_InterleavedPair(benchmark::State& state) {
  const auto in = make_inputs();
  const sim::Problem p = sim::make_problem(in);
  for (auto _ : state)
    benchmark::DoNotOptimize(sim::run_interleaved(p, p, int(state.range(0))).stats.total_cycles);
}
BENCHMARK(BM_InterleavedPair)->Arg(5);

}  // namespace
