#include <benchmark/benchmark.h>

#include "uqkit/estimators.hpp"
#include "uqkit/similarity.hpp"
#include "uqkit/synth.hpp"

namespace {

uq::SynthResult make_dataset(int prompts, int aux, int samples, int dim) {
  uq::SynthConfig config;
  config.n_prompts = prompts;
  config.n_clusters = 8;
  config.embedding_dim = dim;
  config.n_aux_models = aux;
  config.n_samples = samples;
  config.intra_model_consistency = 0.7;
  config.redundancy_knob = 0.5;
  config.centroid_jitter = 0.05;
  config.seed = 1234;
  return uq::generate(config);
}

void BM_BuildSimilarityMatrix(benchmark::State& state) {
  auto data = make_dataset(1, static_cast<int>(state.range(0)), 8, 256);
  const auto& bundle = data.bundles.front();
  auto backend = uq::SimilarityBackend::embedding();
  for (auto _ : state) {
    benchmark::DoNotOptimize(uq::build_matrix(bundle, backend));
  }
}
BENCHMARK(BM_BuildSimilarityMatrix)->Arg(1)->Arg(4);

void BM_ScoreDataset(benchmark::State& state) {
  auto data = make_dataset(static_cast<int>(state.range(0)), 3, 4, 64);
  auto backend = uq::SimilarityBackend::embedding();
  for (auto _ : state) {
    benchmark::DoNotOptimize(uq::score_dataset(data.bundles, backend));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreDataset)->Arg(64)->Arg(512);

void BM_ScoreDatasetWeighted(benchmark::State& state) {
  auto data = make_dataset(128, 3, 4, 64);
  auto backend = uq::SimilarityBackend::embedding();
  uq::WeightedConfig weighted{0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(uq::score_dataset(data.bundles, backend, weighted));
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_ScoreDatasetWeighted);

}  // namespace
