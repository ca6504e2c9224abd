#include "uqkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "uqkit/dataset.hpp"
#include "uqkit/error.hpp"
#include "uqkit/stats.hpp"

namespace uq {

namespace {

void check_config(const SynthConfig& c) {
  if (c.n_prompts < 1) throw ConfigInvalid("n_prompts must be >= 1");
  if (c.n_clusters < 2) throw ConfigInvalid("n_clusters must be >= 2");
  if (c.correct_cluster < 0 || c.correct_cluster >= c.n_clusters) {
    throw ConfigInvalid("correct_cluster out of range");
  }
  if (c.n_aux_models < 0) throw ConfigInvalid("n_aux_models must be >= 0");
  if (c.n_samples < 1) throw ConfigInvalid("n_samples must be >= 1");
  if (c.embedding_dim < c.n_clusters) {
    throw ConfigInvalid("embedding_dim must be >= n_clusters for orthogonal centroids");
  }
  for (double p : {c.model_accuracy, c.intra_model_consistency, c.redundancy_knob}) {
    if (p < 0.0 || p > 1.0) throw ConfigInvalid("probabilities must lie in [0, 1]");
  }
  if (c.centroid_jitter < 0.0) throw ConfigInvalid("centroid_jitter must be >= 0");
  if (c.planted_confident_failures < 0 || c.planted_consistent_correct < 0) {
    throw ConfigInvalid("planted counts must be >= 0");
  }
  if (c.planted_confident_failures + c.planted_consistent_correct > c.n_prompts) {
    throw ConfigInvalid("planted prompts exceed n_prompts");
  }
  if (c.disjoint_correct_sets && c.n_clusters - 1 < c.n_aux_models + 1) {
    throw ConfigInvalid("disjoint_correct_sets needs n_clusters > n_aux_models + 1");
  }
}

std::string prompt_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "synth-%05d", index);
  return buf;
}

std::string aux_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "synth-aux-%02d", index + 1);
  return buf;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int uniform_int(std::mt19937_64& rng, int n) {
  return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

// A cluster other than `avoid`, uniform.
int other_cluster(std::mt19937_64& rng, int n_clusters, int avoid) {
  int c = uniform_int(rng, n_clusters - 1);
  return c >= avoid ? c + 1 : c;
}

std::vector<double> sample_embedding(const SynthConfig& config, int cluster,
                                     std::mt19937_64& rng) {
  std::vector<double> e(config.embedding_dim, 0.0);
  e[cluster] = 1.0;
  if (config.centroid_jitter > 0.0) {
    std::normal_distribution<double> noise(0.0, config.centroid_jitter);
    double norm = 0.0;
    for (auto& v : e) {
      v += noise(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (auto& v : e) v /= norm;
    } else {
      e.assign(config.embedding_dim, 0.0);
      e[cluster] = 1.0;
    }
  }
  return e;
}

}  // namespace

SynthResult generate(const SynthConfig& config) {
  check_config(config);

  SynthResult result;
  result.reference_model = "synth-ref";
  for (int i = 0; i < config.n_aux_models; ++i) {
    result.auxiliary_models.push_back(aux_name(i));
  }
  std::vector<std::string> all_models;
  all_models.push_back(result.reference_model);
  all_models.insert(all_models.end(), result.auxiliary_models.begin(),
                    result.auxiliary_models.end());
  int n_models = static_cast<int>(all_models.size());

  // Distinct error clusters for the disjoint regime, in a fixed order.
  std::vector<int> error_pool;
  for (int c = 0; c < config.n_clusters; ++c) {
    if (c != config.correct_cluster) error_pool.push_back(c);
  }

  for (int p = 0; p < config.n_prompts; ++p) {
    std::mt19937_64 rng(mix_seed(config.seed ^ (0x5151u + static_cast<std::uint64_t>(p))));
    SynthGroundTruth truth;
    truth.prompt_id = prompt_name(p);

    // Home cluster per model, by regime.
    std::map<std::string, int> homes;
    if (p < config.planted_confident_failures) {
      truth.scenario = "confident_failure";
      homes[result.reference_model] = error_pool[p % error_pool.size()];
      for (const auto& aux : result.auxiliary_models) homes[aux] = config.correct_cluster;
    } else if (p < config.planted_confident_failures + config.planted_consistent_correct) {
      truth.scenario = "consistent_correct";
      for (const auto& model : all_models) homes[model] = config.correct_cluster;
    } else if (config.disjoint_correct_sets) {
      truth.scenario = "disjoint";
      int winner = p % n_models;
      int next_error = 0;
      for (int m = 0; m < n_models; ++m) {
        homes[all_models[m]] =
            m == winner ? config.correct_cluster : error_pool[next_error++];
      }
    } else if (uniform01(rng) < config.redundancy_knob) {
      if (uniform01(rng) < config.model_accuracy) {
        truth.scenario = "shared_correct";
        for (const auto& model : all_models) homes[model] = config.correct_cluster;
      } else {
        truth.scenario = "shared_wrong";
        for (const auto& model : all_models) {
          homes[model] = other_cluster(rng, config.n_clusters, config.correct_cluster);
        }
      }
    } else {
      truth.scenario = "independent";
      for (const auto& model : all_models) {
        homes[model] = uniform01(rng) < config.model_accuracy
                           ? config.correct_cluster
                           : other_cluster(rng, config.n_clusters, config.correct_cluster);
      }
    }
    truth.home_clusters = homes;

    bool planted = truth.scenario == "confident_failure" ||
                   truth.scenario == "consistent_correct" || truth.scenario == "disjoint";

    // Realize samples: planted regimes are always perfectly consistent so
    // their advertised au/eu values are exact, not just expected.
    std::map<std::string, std::vector<int>> clusters;
    for (const auto& model : all_models) {
      auto& list = clusters[model];
      for (int s = 0; s < config.n_samples; ++s) {
        int home = homes[model];
        bool stay = planted || uniform01(rng) < config.intra_model_consistency;
        list.push_back(stay ? home : other_cluster(rng, config.n_clusters, home));
      }
      truth.model_correct[model] = list.front() == config.correct_cluster;
    }

    if (config.centroid_jitter == 0.0) {
      const auto& ref = clusters[result.reference_model];
      double n = static_cast<double>(config.n_samples);
      double self_pairs = 0.0;
      for (int k = 0; k < config.n_samples; ++k) {
        for (int j = 0; j < config.n_samples; ++j) {
          self_pairs += ref[k] == ref[j] ? 1.0 : 0.0;
        }
      }
      truth.expected_au = 1.0 - self_pairs / (n * n);
      if (!result.auxiliary_models.empty()) {
        double mean_sum = 0.0;
        for (const auto& aux : result.auxiliary_models) {
          const auto& list = clusters[aux];
          double cross = 0.0;
          for (int k = 0; k < config.n_samples; ++k) {
            for (int j = 0; j < config.n_samples; ++j) {
              cross += ref[k] == list[j] ? 1.0 : 0.0;
            }
          }
          mean_sum += cross / (n * n);
        }
        truth.expected_tu =
            1.0 - mean_sum / static_cast<double>(result.auxiliary_models.size());
        truth.expected_eu = *truth.expected_tu - *truth.expected_au;
      }
    }

    for (const auto& model : all_models) {
      const auto& list = clusters[model];
      for (int s = 0; s < config.n_samples; ++s) {
        ResponseRecord rec;
        rec.prompt_id = truth.prompt_id;
        rec.model_id = model;
        rec.sample_index = s;
        rec.text = "cluster " + std::to_string(list[s]) + " response from " + model +
                   " sample " + std::to_string(s) + " on " + truth.prompt_id;
        rec.embedding = sample_embedding(config, list[s], rng);
        if (s == 0) {
          rec.correctness = list[s] == config.correct_cluster ? 1.0 : 0.0;
        }
        result.records.push_back(std::move(rec));
      }
    }
    result.ground_truth.push_back(std::move(truth));
  }

  result.bundles = assemble_bundles(result.records, result.reference_model,
                                    result.auxiliary_models, config.n_samples,
                                    BundleMode::strict);
  result.correctness = correctness_matrix(result.bundles, 0.5);
  return result;
}

std::vector<UncertaintyScores> oracle_scores(const std::vector<PromptBundle>& bundles) {
  // Everything below is on purpose the long way around: raw loops over raw
  // vectors, no similarity matrix, no shared helpers.
  auto sim = [](const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) throw DimensionMismatch("oracle: embedding widths differ");
    double dot = 0.0, uu = 0.0, vv = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
      dot += u[i] * v[i];
      uu += u[i] * u[i];
      vv += v[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) throw ZeroVector("oracle: zero-norm embedding");
    double c = dot / (std::sqrt(uu) * std::sqrt(vv));
    if (c > 1.0) c = 1.0;
    if (c < 0.0) c = 0.0;
    return c;
  };
  auto embedding_of = [](const ResponseRecord& rec) -> const std::vector<double>& {
    if (!rec.embedding) throw MissingEmbedding("oracle: sample without embedding");
    return *rec.embedding;
  };

  std::vector<UncertaintyScores> scores;
  for (const auto& bundle : bundles) {
    if (bundle.reference_samples.empty()) {
      throw EmptyReference("oracle: prompt " + bundle.prompt_id + " has no reference samples");
    }
    UncertaintyScores row;
    row.prompt_id = bundle.prompt_id;

    size_t n = bundle.reference_samples.size();
    double self_sum = 0.0;
    for (size_t k = 0; k < n; ++k) {
      for (size_t j = 0; j < n; ++j) {
        self_sum += sim(embedding_of(bundle.reference_samples[k]),
                        embedding_of(bundle.reference_samples[j]));
      }
    }
    row.au = 1.0 - self_sum / (static_cast<double>(n) * static_cast<double>(n));

    if (!bundle.auxiliary_samples.empty()) {
      double model_mean_sum = 0.0;
      for (const auto& [model, samples] : bundle.auxiliary_samples) {
        double cross_sum = 0.0;
        for (size_t k = 0; k < n; ++k) {
          for (size_t j = 0; j < samples.size(); ++j) {
            cross_sum += sim(embedding_of(bundle.reference_samples[k]),
                             embedding_of(samples[j]));
          }
        }
        model_mean_sum +=
            cross_sum / (static_cast<double>(n) * static_cast<double>(samples.size()));
      }
      row.tu = 1.0 - model_mean_sum / static_cast<double>(bundle.auxiliary_samples.size());
      row.eu = *row.tu - row.au;
    }
    scores.push_back(std::move(row));
  }
  return scores;
}

}  // namespace uq
