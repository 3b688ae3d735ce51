#include <random>

#include <benchmark/benchmark.h>

#include <argjudge/analysis.hpp>

using namespace argjudge;

static void BM_KMeansTwo(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> lo(1.5, 0.4), hi(6.0, 0.8);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 3 ? lo(rng) : hi(rng);
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_two(v));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KMeansTwo)->RangeMultiplier(4)->Range(64, 65536)->Complexity(benchmark::oNLogN);

BENCHMARK_MAIN();
