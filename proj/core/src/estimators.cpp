#include "uqkit/estimators.hpp"

#include "uqkit/error.hpp"

namespace uq {

namespace {

void check_reference(const PromptBundle& bundle) {
  if (bundle.reference_samples.empty()) {
    throw EmptyReference("prompt " + bundle.prompt_id + ": no reference samples");
  }
}

}  // namespace

double aleatoric(const PromptBundle& bundle, const SimilarityMatrix& matrix) {
  check_reference(bundle);
  size_t n = bundle.reference_samples.size();
  double sum = 0.0;
  for (size_t k = 0; k < n; ++k) {
    for (size_t j = 0; j < n; ++j) {
      sum += matrix.at(k, j);
    }
  }
  return 1.0 - sum / (static_cast<double>(n) * static_cast<double>(n));
}

double total(const PromptBundle& bundle, const SimilarityMatrix& matrix) {
  check_reference(bundle);
  if (bundle.auxiliary_samples.empty()) {
    throw NoAuxiliaryModels("prompt " + bundle.prompt_id + ": no auxiliary models");
  }
  size_t n = bundle.reference_samples.size();
  size_t offset = n;  // auxiliary blocks follow the reference block in key order
  double model_mean_sum = 0.0;
  for (const auto& [model, samples] : bundle.auxiliary_samples) {
    size_t ni = samples.size();
    double sum = 0.0;
    for (size_t k = 0; k < n; ++k) {
      for (size_t j = 0; j < ni; ++j) {
        sum += matrix.at(k, offset + j);
      }
    }
    model_mean_sum += sum / (static_cast<double>(n) * static_cast<double>(ni));
    offset += ni;
  }
  return 1.0 - model_mean_sum / static_cast<double>(bundle.auxiliary_samples.size());
}

double weighted_total(double au, double eu, const WeightedConfig& config) {
  if (config.lambda < 0.0 || config.lambda > 1.0) {
    throw ConfigInvalid("lambda must lie in [0, 1]");
  }
  return config.lambda * au + (1.0 - config.lambda) * eu;
}

std::vector<UncertaintyScores> score_dataset(
    const std::vector<PromptBundle>& bundles, const SimilarityBackend& backend,
    std::optional<WeightedConfig> weighted) {
  std::vector<UncertaintyScores> scores;
  scores.reserve(bundles.size());
  for (const auto& bundle : bundles) {
    auto matrix = build_matrix(bundle, backend);
    UncertaintyScores row;
    row.prompt_id = bundle.prompt_id;
    row.au = aleatoric(bundle, matrix);
    if (!bundle.auxiliary_samples.empty()) {
      row.tu = total(bundle, matrix);
      row.eu = epistemic(row.au, *row.tu);
      if (weighted) row.tu_lambda = weighted_total(row.au, *row.eu, *weighted);
    }
    scores.push_back(std::move(row));
  }
  return scores;
}

}  // namespace uq
