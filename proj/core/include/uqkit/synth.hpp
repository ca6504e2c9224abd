#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uqkit/types.hpp"

namespace uq {

// Synthetic response generator with known ground truth. Each sample is a
// cluster label realized as a fixed unit embedding; cluster centroids are
// mutually orthogonal axes, so similarity is exactly 1 within a cluster and
// 0 across clusters and every uncertainty value has a closed form.
struct SynthConfig {
  int n_prompts = 100;
  int n_clusters = 4;
  int correct_cluster = 0;
  int n_aux_models = 2;
  int n_samples = 2;  // per model
  int embedding_dim = 8;

  // Probability a model's first-choice ("home") cluster is the correct one.
  double model_accuracy = 0.7;
  // Probability each sample stays in its model's home cluster; at 1.0 every
  // model is perfectly self-consistent and scores are exact rationals.
  double intra_model_consistency = 1.0;
  // Probability a prompt is "shared fate": every model succeeds together or
  // fails together (failing models diverge into independently drawn error
  // clusters). At 1.0 the models' correct sets coincide and epistemic
  // uncertainty separates collective failures cleanly; at 0.0 models act
  // independently.
  double redundancy_knob = 1.0;
  // Additive Gaussian noise on each sample embedding (renormalized). Leaves
  // the cluster ground truth intact but blurs similarities; closed-form
  // expected scores are only recorded when this is 0.
  double centroid_jitter = 0.0;

  std::uint64_t seed = 0;

  // Forced regimes, laid out before the probabilistic prompts.
  // Confident failure: the reference is perfectly consistent on a wrong
  // cluster while every auxiliary sits on the correct one, so au = 0 and
  // tu = eu = 1. Consistent correct: everyone on the correct cluster, all
  // three scores 0.
  int planted_confident_failures = 0;
  int planted_consistent_correct = 0;
  // Round-robin complementarity: prompt i is answered correctly by model
  // (i mod m+1) alone and every other model sits on its own distinct error
  // cluster. Needs n_clusters > n_aux_models + 1.
  bool disjoint_correct_sets = false;
};

// Sidecar row describing what was planted for one prompt.
struct SynthGroundTruth {
  std::string prompt_id;
  std::string scenario;  // confident_failure, consistent_correct, shared_correct,
                         // shared_wrong, independent, disjoint
  std::map<std::string, int> home_clusters;
  std::map<std::string, bool> model_correct;  // from each model's first sample
  // Exact per-prompt values implied by the realized cluster assignments;
  // absent when centroid_jitter > 0.
  std::optional<double> expected_au;
  std::optional<double> expected_tu;
  std::optional<double> expected_eu;
};

struct SynthResult {
  std::string reference_model;
  std::vector<std::string> auxiliary_models;
  std::vector<ResponseRecord> records;
  std::vector<PromptBundle> bundles;
  CorrectnessMatrix correctness;  // reference column first
  std::vector<SynthGroundTruth> ground_truth;
};

SynthResult generate(const SynthConfig& config);

// Estimator re-implementation used only for cross-checks: similarity and the
// three uncertainty values are recomputed with plain nested loops straight
// from the bundle embeddings. Deliberately shares no code with the
// estimators module.
std::vector<UncertaintyScores> oracle_scores(const std::vector<PromptBundle>& bundles);

}  // namespace uq
