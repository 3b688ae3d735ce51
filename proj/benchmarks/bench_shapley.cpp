#include <random>

#include <benchmark/benchmark.h>

#include <argjudge/analysis.hpp>

using namespace argjudge;

static void BM_ExactShapley(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<FeatureVector> bg(static_cast<std::size_t>(state.range(0)));
  for (auto& b : bg) b = {u(rng), u(rng), u(rng)};
  const PredictFn f = [](const FeatureVector& x) { return x[0] * x[1] + 2.0 * x[2]; };
  for (auto _ : state) benchmark::DoNotOptimize(exact_shapley(f, {0.3, 0.6, 0.9}, bg));
}
BENCHMARK(BM_ExactShapley)->Arg(100)->Arg(1000);

static void BM_ExplainForest(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::vector<FeatureRow> data;
  for (int i = 0; i < 300; ++i) {
    FeatureRow r{std::to_string(i), static_cast<double>(20 + rng() % 80), static_cast<double>(rng() % 2),
                 static_cast<double>(rng() % 2), 0};
    r.target = 3.0 * r.x_contrast + 0.02 * r.x_length;
    data.push_back(r);
  }
  ForestParams p;
  p.n_trees = 50;
  const auto forest = fit_forest(data, p);
  const PredictFn f = [&forest](const FeatureVector& x) { return forest.predict(x); };
  for (auto _ : state) benchmark::DoNotOptimize(explain(f, data, data));
}
BENCHMARK(BM_ExplainForest)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
