#include <benchmark/benchmark.h>

#include "treeid/dynamics.hpp"
#include "treeid/harness.hpp"
#include "treeid/spectral.hpp"

using namespace treeid;

static void BM_DiscretizeIeee39(benchmark::State& state) {
  const auto model = ieee39_tree_case();
  for (auto _ : state) benchmark::DoNotOptimize(discretize_zoh(model));
}
BENCHMARK(BM_DiscretizeIeee39)->Unit(benchmark::kMillisecond);

static void BM_SimulateStream(benchmark::State& state) {
  const auto model = state.range(0) == 39 ? ieee39_tree_case() : chain_case(static_cast<std::size_t>(state.range(0)));
  const auto dss = discretize_zoh(model);
  const std::size_t n = 100'000;
  for (auto _ : state) {
    double sink = 0.0;
    simulate_stream(dss, model.noise, {n, 1, 0}, [&](std::span<const double> y) { sink += y[0]; });
    benchmark::DoNotOptimize(sink);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_SimulateStream)->Arg(5)->Arg(39)->Unit(benchmark::kMillisecond);

static void BM_AnalyticPsd(benchmark::State& state) {
  const auto model = ieee39_tree_case();
  const auto dss = discretize_zoh(model);
  const auto grid = fft_grid(1024);
  for (auto _ : state) benchmark::DoNotOptimize(analytic_psd(dss, model.noise, grid, model.labels()));
}
BENCHMARK(BM_AnalyticPsd)->Unit(benchmark::kMillisecond);
