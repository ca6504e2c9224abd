#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "uqkit/metrics.hpp"

namespace {

std::vector<uq::LabeledScore> make_items(size_t n) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<uq::LabeledScore> items;
  items.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    double score = uniform(rng);
    items.push_back({"p" + std::to_string(i), score, uniform(rng) < 0.7 - 0.3 * score});
  }
  items[0].correct = true;
  items[1].correct = false;
  return items;
}

void BM_Auroc(benchmark::State& state) {
  auto items = make_items(static_cast<size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(uq::auroc(items));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(10000);

void BM_RiskCoverage(benchmark::State& state) {
  auto items = make_items(static_cast<size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(uq::risk_coverage(items));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RiskCoverage)->Arg(1000)->Arg(10000);

void BM_BootstrapAuroc(benchmark::State& state) {
  auto items = make_items(2000);
  uq::BootstrapConfig config;
  config.iterations = static_cast<int>(state.range(0));
  config.seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(uq::bootstrap_auroc(items, config));
  }
}
BENCHMARK(BM_BootstrapAuroc)->Arg(100)->Arg(400);

void BM_Evaluate(benchmark::State& state) {
  auto items = make_items(5000);
  uq::BootstrapConfig config;
  config.iterations = 100;
  config.seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(uq::evaluate("bench", items, config));
  }
}
BENCHMARK(BM_Evaluate);

}  // namespace

BENCHMARK_MAIN();
