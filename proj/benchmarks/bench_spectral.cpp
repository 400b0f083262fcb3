#include <random>

#include <benchmark/benchmark.h>

#include "treeid/spectral.hpp"

using namespace treeid;

namespace {

TimeSeriesPanel noise_panel(std::size_t m, std::size_t n) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  TimeSeriesPanel p;
  for (std::size_t i = 0; i < m; ++i) p.labels.push_back(std::to_string(i));
  p.samples.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < p.samples.size(); ++i) p.samples.data()[i] = normal(gen);
  return p;
}

}  // namespace

// Nodes x 2^16 samples, default window.
static void BM_WelchPanel(benchmark::State& state) {
  const auto panel = noise_panel(static_cast<std::size_t>(state.range(0)), 1u << 16);
  for (auto _ : state) benchmark::DoNotOptimize(welch_cross_psd(panel, {}));
  state.SetItemsProcessed(state.iterations() * panel.samples.cols());
}
BENCHMARK(BM_WelchPanel)->Arg(5)->Arg(20)->Arg(39)->Unit(benchmark::kMillisecond);

static void BM_WelchStreaming(benchmark::State& state) {
  const auto panel = noise_panel(static_cast<std::size_t>(state.range(0)), 1u << 16);
  std::vector<double> y(panel.labels.size());
  for (auto _ : state) {
    WelchAccumulator acc(panel.labels, {});
    for (Eigen::Index k = 0; k < panel.samples.cols(); ++k) {
      for (Eigen::Index i = 0; i < panel.samples.rows(); ++i) y[static_cast<std::size_t>(i)] = panel.samples(i, k);
      acc.push(y);
    }
    benchmark::DoNotOptimize(acc.finish());
  }
  state.SetItemsProcessed(state.iterations() * panel.samples.cols());
}
BENCHMARK(BM_WelchStreaming)->Arg(5)->Arg(39)->Unit(benchmark::kMillisecond);
