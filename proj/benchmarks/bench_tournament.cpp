#include <random>

#include <benchmark/benchmark.h>

#include <argjudge/tournament.hpp>

using namespace argjudge;

static std::vector<ComparisonOutcome> round_robin(std::size_t m, std::mt19937_64& rng) {
  std::vector<ComparisonOutcome> out;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      ComparisonOutcome o;
      const auto a = "m" + std::to_string(i), b = "m" + std::to_string(j);
      o.comparison = Comparison{"p", a, b, "p/" + a, "p/" + b};
      o.outcome = static_cast<Outcome>(rng() % 3);
      out.push_back(std::move(o));
    }
  return out;
}

static void BM_ScoreRoundRobin(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto outcomes = round_robin(m, rng);
  std::vector<std::string> who;
  for (std::size_t i = 0; i < m; ++i) who.push_back("m" + std::to_string(i));
  for (auto _ : state) benchmark::DoNotOptimize(score_round_robin(outcomes, who));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(outcomes.size()));
}
BENCHMARK(BM_ScoreRoundRobin)->Arg(9)->Arg(16)->Arg(64);

static void BM_PlanComparisons(benchmark::State& state) {
  std::vector<ArgumentPair> pairs(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].id = "p" + std::to_string(i);
  std::vector<std::string> who;
  for (int i = 0; i < 9; ++i) who.push_back("m" + std::to_string(i));
  for (auto _ : state) benchmark::DoNotOptimize(plan_comparisons(pairs, who));
}
BENCHMARK(BM_PlanComparisons)->Arg(100)->Arg(1000);

BENCHMARK_MAIN();
