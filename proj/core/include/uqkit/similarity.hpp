#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "uqkit/types.hpp"

namespace uq {

// Identifies one sample inside a bundle. The string form is "model:index"
// with the index after the last colon, so model ids containing colons stay
// parseable.
struct SampleKey {
  std::string model_id;
  int sample_index = 0;

  auto operator<=>(const SampleKey&) const = default;
  std::string str() const;
  static SampleKey parse(const std::string& key);
};

// Dense symmetric matrix of pairwise similarities over an ordered sample
// list. Bundles stay small ((m+1) * n on the order of tens), so dense
// row-major storage is the whole story.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::vector<SampleKey> keys, std::vector<double> values);

  size_t size() const { return keys_.size(); }
  double at(size_t i, size_t j) const { return values_[i * keys_.size() + j]; }
  const std::vector<SampleKey>& keys() const { return keys_; }

  // Index of a key in the sample ordering; throws MatrixKeyMismatch if absent.
  size_t index_of(const SampleKey& key) const;

  bool symmetric(double tol = 1e-9) const;

 private:
  std::vector<SampleKey> keys_;
  std::vector<double> values_;
};

// Raw cosine in [-1, 1]. Throws ZeroVector / DimensionMismatch.
double cosine(std::span<const double> u, std::span<const double> v);

// Similarity actually used by the estimators: negative cosines are treated as
// "no shared meaning" and clamped to zero.
double clamped_cosine(std::span<const double> u, std::span<const double> v);

// Pairwise scores loaded from an external judgment dump (e.g. an entailment
// model). File format: JSONL lines {"key_a": "model:index", "key_b": ...,
// "score": s}. Directed duplicates of a pair are averaged, which symmetrizes
// asymmetric scores like entailment probabilities; results are clamped to
// [0, 1]. A missing self-pair defaults to 1.
class ExternalScores {
 public:
  static ExternalScores load(const std::string& path);

  // Extracts the sub-matrix for an ordered key list. Throws MissingPair when
  // an off-diagonal pair is not covered.
  SimilarityMatrix matrix_for(const std::vector<SampleKey>& keys) const;

 private:
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> sums_;
};

SimilarityMatrix load_external_matrix(const std::string& path,
                                      const std::vector<SampleKey>& keys);

struct SimilarityBackend {
  enum class Kind { embedding_cosine, external_matrix };
  Kind kind = Kind::embedding_cosine;
  std::shared_ptr<const ExternalScores> external;

  static SimilarityBackend embedding();
  static SimilarityBackend external_file(const std::string& path);
};

// Sample ordering for a bundle: reference samples first, then each auxiliary
// model's samples in map order. All downstream block sums assume this.
std::vector<SampleKey> bundle_sample_keys(const PromptBundle& bundle);

// Builds the full similarity matrix for one bundle. Embedding backend: clamped
// cosine with an exact unit diagonal. External backend: looks up every pair,
// throwing MatrixKeyMismatch when the file does not cover the bundle.
SimilarityMatrix build_matrix(const PromptBundle& bundle, const SimilarityBackend& backend);

}  // namespace uq
