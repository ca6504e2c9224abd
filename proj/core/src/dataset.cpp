#include "uqkit/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "uqkit/error.hpp"

namespace uq {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string at_line(size_t line_no, const std::string& what) {
  return "line " + std::to_string(line_no) + ": " + what;
}

ResponseRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  ResponseRecord rec;
  try {
    rec.prompt_id = j.at("prompt_id").get<std::string>();
    rec.model_id = j.at("model_id").get<std::string>();
    rec.sample_index = j.at("sample_index").get<int>();
    rec.text = j.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("missing or mistyped required field: ") + e.what());
  }
  if (rec.prompt_id.empty()) throw ParseError("prompt_id must be non-empty");
  if (rec.model_id.empty()) throw ParseError("model_id must be non-empty");
  if (rec.sample_index < 0) throw ParseError("sample_index must be >= 0");
  if (j.contains("embedding") && !j["embedding"].is_null()) {
    if (!j["embedding"].is_array()) throw ParseError("embedding must be an array");
    rec.embedding = j["embedding"].get<std::vector<double>>();
  }
  if (j.contains("correctness") && !j["correctness"].is_null()) {
    if (!j["correctness"].is_number()) throw ParseError("correctness must be a number");
    rec.correctness = j["correctness"].get<double>();
  }
  return rec;
}

}  // namespace

ResponseRecord parse_record(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid JSON: " + line.substr(0, 80));
  return record_from_json(j);
}

std::string serialize_record(const ResponseRecord& record) {
  ordered_json j;
  j["prompt_id"] = record.prompt_id;
  j["model_id"] = record.model_id;
  j["sample_index"] = record.sample_index;
  j["text"] = record.text;
  if (record.embedding) j["embedding"] = *record.embedding;
  if (record.correctness) j["correctness"] = *record.correctness;
  return j.dump();
}

std::vector<ResponseRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<ResponseRecord> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(parse_record(line));
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + at_line(line_no, e.what()));
    }
  }
  return records;
}

void write_records(const std::string& path, const std::vector<ResponseRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& rec : records) out << serialize_record(rec) << "\n";
}

void validate_records(const std::vector<ResponseRecord>& records) {
  if (records.empty()) throw EmptyDataset("dataset contains no records");
  std::set<std::tuple<std::string, std::string, int>> seen;
  size_t embedding_dim = 0;
  for (const auto& rec : records) {
    auto key = std::make_tuple(rec.prompt_id, rec.model_id, rec.sample_index);
    if (!seen.insert(key).second) {
      throw ParseError("duplicate record (" + rec.prompt_id + ", " + rec.model_id +
                       ", " + std::to_string(rec.sample_index) + ")");
    }
    if (rec.embedding) {
      if (rec.embedding->empty()) {
        throw ParseError("empty embedding on (" + rec.prompt_id + ", " + rec.model_id + ")");
      }
      if (embedding_dim == 0) {
        embedding_dim = rec.embedding->size();
      } else if (rec.embedding->size() != embedding_dim) {
        throw ParseError("embedding dimension " + std::to_string(rec.embedding->size()) +
                         " on (" + rec.prompt_id + ", " + rec.model_id +
                         ") differs from " + std::to_string(embedding_dim));
      }
    }
    if (rec.correctness && (*rec.correctness < 0.0 || *rec.correctness > 1.0)) {
      throw ParseError("correctness out of [0,1] on (" + rec.prompt_id + ", " +
                       rec.model_id + ")");
    }
  }
}

std::vector<PromptBundle> assemble_bundles(const std::vector<ResponseRecord>& records,
                                           const std::string& reference_model,
                                           const std::vector<std::string>& auxiliary_models,
                                           int n,
                                           BundleMode mode) {
  if (n < 1) throw ConfigInvalid("samples per model must be >= 1");
  for (const auto& aux : auxiliary_models) {
    if (aux == reference_model) {
      throw ConfigInvalid("auxiliary model duplicates the reference: " + aux);
    }
  }

  // prompt -> model -> samples, keeping first-seen prompt order.
  std::vector<std::string> prompt_order;
  std::map<std::string, std::map<std::string, std::vector<ResponseRecord>>> grouped;
  for (const auto& rec : records) {
    auto [it, inserted] = grouped.try_emplace(rec.prompt_id);
    if (inserted) prompt_order.push_back(rec.prompt_id);
    (*it).second[rec.model_id].push_back(rec);
  }
  std::sort(prompt_order.begin(), prompt_order.end());

  auto take = [n](std::vector<ResponseRecord>& samples) {
    std::sort(samples.begin(), samples.end(),
              [](const ResponseRecord& a, const ResponseRecord& b) {
                return a.sample_index < b.sample_index;
              });
    if (samples.size() > static_cast<size_t>(n)) samples.resize(n);
  };

  std::vector<PromptBundle> bundles;
  for (const auto& prompt_id : prompt_order) {
    auto& models = grouped[prompt_id];
    PromptBundle bundle;
    bundle.prompt_id = prompt_id;
    bundle.reference_model = reference_model;

    auto ref_it = models.find(reference_model);
    size_t ref_count = ref_it == models.end() ? 0 : ref_it->second.size();
    if (mode == BundleMode::strict && ref_count < static_cast<size_t>(n)) {
      throw MissingModel("prompt " + prompt_id + ": reference model " + reference_model +
                         " has " + std::to_string(ref_count) + " samples, need " +
                         std::to_string(n));
    }
    if (ref_count == 0) continue;  // lenient: nothing to score this prompt with
    bundle.reference_samples = ref_it->second;
    take(bundle.reference_samples);

    for (const auto& aux : auxiliary_models) {
      auto aux_it = models.find(aux);
      size_t aux_count = aux_it == models.end() ? 0 : aux_it->second.size();
      if (mode == BundleMode::strict && aux_count < static_cast<size_t>(n)) {
        throw MissingModel("prompt " + prompt_id + ": auxiliary model " + aux + " has " +
                           std::to_string(aux_count) + " samples, need " +
                           std::to_string(n));
      }
      if (aux_count == 0) continue;  // lenient: model contributes nothing here
      auto samples = aux_it->second;
      take(samples);
      bundle.auxiliary_samples.emplace(aux, std::move(samples));
    }
    bundles.push_back(std::move(bundle));
  }
  if (bundles.empty()) throw EmptyDataset("no prompts with reference samples");
  return bundles;
}

CorrectnessMatrix correctness_matrix(const std::vector<PromptBundle>& bundles,
                                     double threshold) {
  if (bundles.empty()) throw EmptyDataset("no bundles");

  CorrectnessMatrix matrix;
  matrix.model_ids.push_back(bundles.front().reference_model);
  std::set<std::string> aux_ids;
  for (const auto& bundle : bundles) {
    for (const auto& [model, samples] : bundle.auxiliary_samples) aux_ids.insert(model);
  }
  matrix.model_ids.insert(matrix.model_ids.end(), aux_ids.begin(), aux_ids.end());

  auto first_correct = [&](const PromptBundle& bundle, const std::string& model) {
    const std::vector<ResponseRecord>* samples = nullptr;
    if (model == bundle.reference_model) {
      samples = &bundle.reference_samples;
    } else {
      auto it = bundle.auxiliary_samples.find(model);
      if (it != bundle.auxiliary_samples.end()) samples = &it->second;
    }
    if (samples == nullptr || samples->empty()) {
      throw MissingModel("prompt " + bundle.prompt_id + ": no samples for model " + model);
    }
    const auto& first = samples->front();
    if (!first.correctness) {
      throw MissingCorrectness("prompt " + bundle.prompt_id + ": model " + model +
                               " has no correctness on its first sample");
    }
    return *first.correctness > threshold ? 1 : 0;
  };

  for (const auto& bundle : bundles) {
    matrix.prompt_ids.push_back(bundle.prompt_id);
    std::vector<int> row;
    row.reserve(matrix.model_ids.size());
    for (const auto& model : matrix.model_ids) row.push_back(first_correct(bundle, model));
    matrix.entries.push_back(std::move(row));
  }
  return matrix;
}

}  // namespace uq
