#include <benchmark/benchmark.h>

#include "treeid/graph.hpp"
#include "treeid/prune.hpp"

using namespace treeid;

static void BM_KinGraph(benchmark::State& state) {
  const auto tree = random_tree(static_cast<std::size_t>(state.range(0)), 1, 4);
  for (auto _ : state) benchmark::DoNotOptimize(kin_graph_oracle(tree));
}
BENCHMARK(BM_KinGraph)->RangeMultiplier(2)->Range(8, 256);

static void BM_PruneNonleaf(benchmark::State& state) {
  const auto kin = kin_graph_oracle(random_tree(static_cast<std::size_t>(state.range(0)), 1, 4));
  for (auto _ : state) benchmark::DoNotOptimize(prune_nonleaf(kin));
}
BENCHMARK(BM_PruneNonleaf)->RangeMultiplier(2)->Range(8, 256);

static void BM_ReconstructTree(benchmark::State& state) {
  const auto kin = kin_graph_oracle(random_tree(static_cast<std::size_t>(state.range(0)), 1, 4));
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_tree(kin));
}
BENCHMARK(BM_ReconstructTree)->RangeMultiplier(2)->Range(8, 256);
