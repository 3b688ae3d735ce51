#include <random>

#include <benchmark/benchmark.h>

#include <argjudge/analysis.hpp>

using namespace argjudge;

static std::vector<FeatureRow> rows(std::size_t n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0, 0.5);
  std::vector<FeatureRow> out;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureRow r;
    r.rationale_id = std::to_string(i);
    r.x_length = static_cast<double>(20 + rng() % 80);
    r.x_contrast = static_cast<double>(rng() % 2);
    r.x_novelty = static_cast<double>(rng() % 2);
    r.target = 2.0 + 3.0 * r.x_contrast + 0.02 * r.x_length + noise(rng);
    out.push_back(r);
  }
  return out;
}

static void BM_FitForest(benchmark::State& state) {
  const auto data = rows(static_cast<std::size_t>(state.range(0)));
  ForestParams p;
  p.n_trees = 100;
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(data, p));
}
BENCHMARK(BM_FitForest)->Arg(500)->Arg(3000)->Unit(benchmark::kMillisecond);

static void BM_ForestPredict(benchmark::State& state) {
  const auto data = rows(2000);
  const auto forest = fit_forest(data);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(forest.predict(data[i++ % data.size()].x()));
}
BENCHMARK(BM_ForestPredict);

BENCHMARK_MAIN();
