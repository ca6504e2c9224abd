#pragma once

#include <optional>
#include <vector>

#include "uqkit/similarity.hpp"
#include "uqkit/types.hpp"

namespace uq {

// Ensemble-based uncertainty from pairwise response similarity.
//
// With n reference samples r'_1..r'_n and n_i samples r^(i)_1..r^(i)_{n_i}
// from each of m auxiliary models, and s a similarity in [0, 1]:
//
//   au = 1 - (1/n^2) * sum_{k,j} s(r'_k, r'_j)          (diagonal included)
//   tu = 1 - (1/m) * sum_i (1/(n*n_i)) * sum_{k,j} s(r'_k, r^(i)_j)
//   eu = tu - au
//
// Auxiliary models are weighted uniformly. eu can be negative (auxiliary
// responses agreeing with the reference more than the reference agrees with
// itself) and is reported as-is; clipping it would destroy the additivity
// that tu = au + eu checks rely on.

double aleatoric(const PromptBundle& bundle, const SimilarityMatrix& matrix);

// Requires at least one auxiliary model; throws NoAuxiliaryModels otherwise.
double total(const PromptBundle& bundle, const SimilarityMatrix& matrix);

inline double epistemic(double au, double tu) { return tu - au; }

struct WeightedConfig {
  double lambda = 0.5;  // in [0, 1]; never fitted against labels
};

// lambda * au + (1 - lambda) * eu. At lambda = 0.5 this is tu / 2, so any
// ranking metric computed from it matches the one computed from tu.
double weighted_total(double au, double eu, const WeightedConfig& config);

// Scores every bundle. Bundles without auxiliary models get an au-only row
// (tu and eu absent). Pass a WeightedConfig to also fill tu_lambda.
std::vector<UncertaintyScores> score_dataset(
    const std::vector<PromptBundle>& bundles, const SimilarityBackend& backend,
    std::optional<WeightedConfig> weighted = std::nullopt);

}  // namespace uq
