#include <benchmark/benchmark.h>

#include "nope/amp.hpp"
#include "nope/lmmse.hpp"
#include "nope/nope.hpp"
#include "nope/nope_fixed.hpp"
#include "nope/rng.hpp"

namespace {

using namespace nope;

struct Fixture {
  ChannelMatrix h;
  VecC y;
  double n0;
};

Fixture make_fixture(int b, int u, double snr_db) {
  Philox rng(1234, 0);
  const SystemDims dims(b, u);
  ChannelMatrix h = generate_channel(dims, rng);
  VecC x(u);
  for (int i = 0; i < u; ++i) x[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double n0 = double(u) / (b * std::pow(10.0, snr_db / 10.0));
  VecC y = transmit(h, x, NoiseSpec(n0), rng);
  return {std::move(h), std::move(y), n0};
}

void BM_LmmseExact(benchmark::State& state) {
  const Fixture f = make_fixture(64, 16, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(lmmse_equalize(f.h, f.y, f.n0).xhat);
}
BENCHMARK(BM_LmmseExact);

void BM_LmmseAmp(benchmark::State& state) {
  const Fixture f = make_fixture(64, 16, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(lmmse_amp_run(f.h, f.y, 1.0, int(state.range(0))).z);
}
BENCHMARK(BM_LmmseAmp)->Arg(5)->Arg(10);

void BM_NopeFloat(benchmark::State& state) {
  const Fixture f = make_fixture(64, 16, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(nope_run(f.h, f.y, int(state.range(0))).z);
}
BENCHMARK(BM_NopeFloat)->Arg(5)->Arg(7);

void BM_NopeFixed(benchmark::State& state) {
  const Fixture f = make_fixture(64, 16, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(fxp::nope_run_fixed(f.h, f.y, int(state.range(0))).state.z);
}
BENCHMARK(BM_NopeFixed)->Arg(5)->Arg(7);

}  // namespace

BENCHMARK_MAIN();
