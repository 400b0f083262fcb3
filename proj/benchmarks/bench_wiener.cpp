#include <benchmark/benchmark.h>

#include "treeid/dynamics.hpp"
#include "treeid/graph.hpp"
#include "treeid/spectral.hpp"
#include "treeid/wiener.hpp"

using namespace treeid;

namespace {

SpectralDensityField tree_field(std::size_t n) {
  const auto model = GridNetworkModel::uniform(random_tree(n, 2, 4));
  return analytic_psd(discretize_zoh(model), model.noise, fft_grid(1024), model.labels());
}

}  // namespace

static void BM_WienerFilters(benchmark::State& state) {
  const auto field = tree_field(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(wiener_filters(field));
}
BENCHMARK(BM_WienerFilters)->Arg(5)->Arg(20)->Arg(39)->Unit(benchmark::kMillisecond);

static void BM_InversePsdFilters(benchmark::State& state) {
  const auto field = tree_field(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(inverse_psd_filters(field));
}
BENCHMARK(BM_InversePsdFilters)->Arg(5)->Arg(20)->Arg(39)->Unit(benchmark::kMillisecond);

static void BM_ScoresAndThreshold(benchmark::State& state) {
  const auto bank = wiener_filters(tree_field(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(threshold_kin(coupling_scores(bank)));
}
BENCHMARK(BM_ScoresAndThreshold)->Arg(5)->Arg(39);
