#include "uqkit/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "uqkit/error.hpp"

namespace uq {

namespace {

std::pair<std::string, std::string> ordered_pair(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

}  // namespace

std::string SampleKey::str() const {
  return model_id + ":" + std::to_string(sample_index);
}

SampleKey SampleKey::parse(const std::string& key) {
  auto pos = key.rfind(':');
  if (pos == std::string::npos || pos + 1 == key.size()) {
    throw ParseError("sample key without ':index' suffix: " + key);
  }
  SampleKey out;
  out.model_id = key.substr(0, pos);
  try {
    out.sample_index = std::stoi(key.substr(pos + 1));
  } catch (const std::exception&) {
    throw ParseError("sample key with non-numeric index: " + key);
  }
  if (out.model_id.empty() || out.sample_index < 0) {
    throw ParseError("malformed sample key: " + key);
  }
  return out;
}

SimilarityMatrix::SimilarityMatrix(std::vector<SampleKey> keys, std::vector<double> values)
    : keys_(std::move(keys)), values_(std::move(values)) {
  if (values_.size() != keys_.size() * keys_.size()) {
    throw DimensionMismatch("similarity matrix has " + std::to_string(values_.size()) +
                            " entries for " + std::to_string(keys_.size()) + " keys");
  }
}

size_t SimilarityMatrix::index_of(const SampleKey& key) const {
  auto it = std::find(keys_.begin(), keys_.end(), key);
  if (it == keys_.end()) {
    throw MatrixKeyMismatch("sample key not in matrix: " + key.str());
  }
  return static_cast<size_t>(it - keys_.begin());
}

bool SimilarityMatrix::symmetric(double tol) const {
  for (size_t i = 0; i < size(); ++i) {
    for (size_t j = i + 1; j < size(); ++j) {
      if (std::abs(at(i, j) - at(j, i)) > tol) return false;
    }
  }
  return true;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimensionMismatch("cosine over dimensions " + std::to_string(u.size()) +
                            " and " + std::to_string(v.size()));
  }
  if (u.empty()) throw ZeroVector("cosine over empty vectors");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw ZeroVector("cosine with a zero-norm vector");
  double raw = dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(raw, -1.0, 1.0);
}

double clamped_cosine(std::span<const double> u, std::span<const double> v) {
  return std::max(0.0, cosine(u, v));
}

ExternalScores ExternalScores::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  ExternalScores scores;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": invalid JSON");
    }
    std::string key_a, key_b;
    double score = 0.0;
    try {
      key_a = j.at("key_a").get<std::string>();
      key_b = j.at("key_b").get<std::string>();
      score = j.at("score").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    SampleKey::parse(key_a);  // validate shape early
    SampleKey::parse(key_b);
    auto& slot = scores.sums_[ordered_pair(key_a, key_b)];
    slot.first += score;
    slot.second += 1;
  }
  return scores;
}

SimilarityMatrix ExternalScores::matrix_for(const std::vector<SampleKey>& keys) const {
  size_t k = keys.size();
  std::vector<double> values(k * k, 0.0);
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = i; j < k; ++j) {
      auto it = sums_.find(ordered_pair(keys[i].str(), keys[j].str()));
      double value;
      if (it == sums_.end()) {
        if (i != j) {
          throw MissingPair("no score for pair (" + keys[i].str() + ", " +
                            keys[j].str() + ")");
        }
        value = 1.0;  // self-similarity defaults to 1 when the dump omits it
      } else {
        value = it->second.first / it->second.second;
      }
      value = std::clamp(value, 0.0, 1.0);
      values[i * k + j] = value;
      values[j * k + i] = value;
    }
  }
  return SimilarityMatrix(keys, std::move(values));
}

SimilarityMatrix load_external_matrix(const std::string& path,
                                      const std::vector<SampleKey>& keys) {
  return ExternalScores::load(path).matrix_for(keys);
}

SimilarityBackend SimilarityBackend::embedding() {
  return SimilarityBackend{Kind::embedding_cosine, nullptr};
}

SimilarityBackend SimilarityBackend::external_file(const std::string& path) {
  return SimilarityBackend{Kind::external_matrix,
                           std::make_shared<ExternalScores>(ExternalScores::load(path))};
}

std::vector<SampleKey> bundle_sample_keys(const PromptBundle& bundle) {
  std::vector<SampleKey> keys;
  for (const auto& rec : bundle.reference_samples) {
    keys.push_back({rec.model_id, rec.sample_index});
  }
  for (const auto& [model, samples] : bundle.auxiliary_samples) {
    for (const auto& rec : samples) keys.push_back({rec.model_id, rec.sample_index});
  }
  return keys;
}

SimilarityMatrix build_matrix(const PromptBundle& bundle, const SimilarityBackend& backend) {
  auto keys = bundle_sample_keys(bundle);

  if (backend.kind == SimilarityBackend::Kind::external_matrix) {
    if (!backend.external) throw ConfigInvalid("external backend without loaded scores");
    try {
      return backend.external->matrix_for(keys);
    } catch (const MissingPair& e) {
      throw MatrixKeyMismatch("prompt " + bundle.prompt_id + ": " + e.what());
    }
  }

  std::vector<const std::vector<double>*> embeddings;
  embeddings.reserve(keys.size());
  auto collect = [&](const std::vector<ResponseRecord>& samples) {
    for (const auto& rec : samples) {
      if (!rec.embedding) {
        throw MissingEmbedding("prompt " + bundle.prompt_id + ": sample " +
                               SampleKey{rec.model_id, rec.sample_index}.str() +
                               " has no embedding");
      }
      embeddings.push_back(&*rec.embedding);
    }
  };
  collect(bundle.reference_samples);
  for (const auto& [model, samples] : bundle.auxiliary_samples) collect(samples);

  size_t k = keys.size();
  std::vector<double> values(k * k, 0.0);
  for (size_t i = 0; i < k; ++i) {
    values[i * k + i] = 1.0;
    for (size_t j = i + 1; j < k; ++j) {
      double s = clamped_cosine(*embeddings[i], *embeddings[j]);
      values[i * k + j] = s;
      values[j * k + i] = s;
    }
  }
  return SimilarityMatrix(std::move(keys), std::move(values));
}

}  // namespace uq
