#include "uqkit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "uqkit/dataset.hpp"
#include "uqkit/diagnostics.hpp"
#include "uqkit/error.hpp"
#include "uqkit/estimators.hpp"
#include "uqkit/divergence.hpp"
#include "uqkit/report.hpp"
#include "uqkit/stats.hpp"

namespace fs = std::filesystem;

namespace uq {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const std::vector<std::string> kStageOrder = {"ingest", "embed",    "judge", "score",
                                              "evaluate", "diagnose", "report"};

// Bump a stage's version whenever its behavior changes; cached runs of the
// old version then re-execute.
const std::map<std::string, int> kStageVersions = {
    {"ingest", 1}, {"embed", 1},    {"judge", 1},  {"score", 1},
    {"evaluate", 1}, {"diagnose", 1}, {"report", 1},
};

void require_keys(const json& object, const std::set<std::string>& allowed,
                  const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) {
      throw ConfigInvalid("unknown field \"" + key + "\" in " + where);
    }
  }
}

EndpointConfig endpoint_from_json(const json& j, const std::string& where) {
  require_keys(j,
               {"base_url", "api_key_env_var", "model_name", "timeout_ms",
                "max_concurrent_requests", "max_retries", "retry_initial_delay_ms"},
               where);
  EndpointConfig config;
  config.base_url = j.value("base_url", config.base_url);
  config.api_key_env_var = j.value("api_key_env_var", config.api_key_env_var);
  config.model_name = j.value("model_name", config.model_name);
  config.timeout = std::chrono::milliseconds(
      j.value("timeout_ms", static_cast<long>(config.timeout.count())));
  config.max_concurrent_requests =
      j.value("max_concurrent_requests", config.max_concurrent_requests);
  config.max_retries = j.value("max_retries", config.max_retries);
  config.retry_initial_delay = std::chrono::milliseconds(
      j.value("retry_initial_delay_ms", static_cast<long>(config.retry_initial_delay.count())));
  if (config.max_concurrent_requests < 1) {
    throw ConfigInvalid(where + ".max_concurrent_requests must be >= 1");
  }
  if (config.max_retries < 0) throw ConfigInvalid(where + ".max_retries must be >= 0");
  return config;
}

ordered_json endpoint_to_json(const EndpointConfig& config) {
  ordered_json j;
  j["base_url"] = config.base_url;
  j["api_key_env_var"] = config.api_key_env_var;
  j["model_name"] = config.model_name;
  j["timeout_ms"] = config.timeout.count();
  j["max_concurrent_requests"] = config.max_concurrent_requests;
  j["max_retries"] = config.max_retries;
  j["retry_initial_delay_ms"] = config.retry_initial_delay.count();
  return j;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// uq::SomeError -> "SomeError", for machine-readable failure reports.
std::string error_type_name(const std::exception& error) {
  std::string mangled = typeid(error).name();
  // Itanium scheme for our own types: N2uq<len><Name>E
  if (mangled.rfind("N2uq", 0) == 0) {
    size_t pos = 4;
    size_t len = 0;
    while (pos < mangled.size() && std::isdigit(static_cast<unsigned char>(mangled[pos]))) {
      len = len * 10 + static_cast<size_t>(mangled[pos] - '0');
      ++pos;
    }
    if (len > 0 && pos + len <= mangled.size()) return mangled.substr(pos, len);
  }
  return mangled;
}

template <typename Fn>
void parallel_for(size_t n_tasks, int workers, Fn&& fn) {
  size_t pool = std::min<size_t>(std::max(workers, 1), n_tasks);
  if (pool <= 1) {
    for (size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (size_t t = 0; t < pool; ++t) {
    threads.emplace_back([&] {
      while (!failed.load()) {
        size_t i = next.fetch_add(1);
        if (i >= n_tasks) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& thread : threads) thread.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct PromptInfo {
  std::string question;
  std::vector<std::string> golds;
};

std::map<std::string, PromptInfo> load_prompt_info(const std::string& path) {
  std::map<std::string, PromptInfo> info;
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": invalid JSON");
    }
    require_keys(j, {"prompt_id", "question", "golds"}, path);
    try {
      PromptInfo entry;
      entry.question = j.at("question").get<std::string>();
      entry.golds = j.at("golds").get<std::vector<std::string>>();
      info[j.at("prompt_id").get<std::string>()] = std::move(entry);
    } catch (const json::exception& e) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return info;
}

// ---- run directory layout -------------------------------------------------

fs::path run_dir(const RunConfig& config) { return fs::path(config.output_dir); }

std::string records_stage_file(const RunConfig& config) {
  // Freshest upstream record set wins.
  for (const char* name : {"judged.jsonl", "embedded.jsonl", "records.jsonl"}) {
    auto path = run_dir(config) / name;
    if (fs::exists(path)) return path.string();
  }
  throw ConfigInvalid("no records in " + config.output_dir + "; run the ingest stage first");
}

// ---- manifest -------------------------------------------------------------

class Manifest {
 public:
  static Manifest open(const RunConfig& config) {
    Manifest m;
    m.path_ = (run_dir(config) / "manifest.json").string();
    m.config_hash_ = fnv1a_hex(config_canonical_json(config));
    m.doc_["config_hash"] = m.config_hash_;
    m.doc_["seed"] = config.seed;
    ordered_json versions;
    for (const auto& [stage, version] : kStageVersions) versions[stage] = version;
    m.doc_["stage_versions"] = versions;
    m.doc_["stages"] = ordered_json::object();
    if (fs::exists(m.path_)) {
      // Parsed order-preserving so a reloaded manifest round-trips byte for
      // byte; stage entries stay in the order they were recorded.
      ordered_json existing = ordered_json::parse(read_file_bytes(m.path_), nullptr, false);
      if (!existing.is_discarded() && existing.is_object() &&
          existing.value("config_hash", "") == m.config_hash_ &&
          existing.contains("stages")) {
        m.doc_["stages"] = existing["stages"];
      }
      // A manifest from a different config is ignored wholesale: every stage
      // re-runs and the file is rewritten.
    }
    return m;
  }

  bool fresh(const std::string& stage, const std::string& input_hash,
             const std::vector<std::string>& outputs, const fs::path& dir) const {
    const auto& stages = doc_.at("stages");
    if (!stages.contains(stage)) return false;
    if (stages.at(stage).value("input_hash", "") != input_hash) return false;
    for (const auto& name : outputs) {
      if (!fs::exists(dir / name)) return false;
    }
    return true;
  }

  void record(const std::string& stage, const std::string& input_hash,
              const std::vector<std::string>& outputs) {
    ordered_json entry;
    entry["input_hash"] = input_hash;
    entry["outputs"] = outputs;
    doc_["stages"][stage] = entry;
    // Anything downstream of a re-run stage is stale now.
    auto it = std::find(kStageOrder.begin(), kStageOrder.end(), stage);
    for (auto later = it + 1; later != kStageOrder.end(); ++later) {
      doc_["stages"].erase(*later);
    }
    dirty_ = true;
  }

  // Writes only after record(); an up-to-date stage leaves the file untouched.
  void save() const {
    if (dirty_) write_text_file(path_, doc_.dump(2) + "\n");
  }

  const std::string& config_hash() const { return config_hash_; }

 private:
  std::string path_;
  std::string config_hash_;
  ordered_json doc_;
  bool dirty_ = false;
};

std::string stage_input_hash(const std::string& stage, const Manifest& manifest,
                             const std::vector<std::string>& input_files) {
  std::string material = stage + "|v" + std::to_string(kStageVersions.at(stage)) + "|" +
                         manifest.config_hash();
  for (const auto& path : input_files) {
    material += "|" + fnv1a_hex(read_file_bytes(path));
  }
  return fnv1a_hex(material);
}

// ---- scores file ----------------------------------------------------------

struct ScoreRow {
  UncertaintyScores scores;
  std::optional<double> au_baseline;
};

void write_scores(const std::string& path, const std::vector<ScoreRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& row : rows) {
    ordered_json j;
    j["prompt_id"] = row.scores.prompt_id;
    j["au"] = row.scores.au;
    if (row.scores.eu) j["eu"] = *row.scores.eu;
    if (row.scores.tu) j["tu"] = *row.scores.tu;
    if (row.scores.tu_lambda) j["tu_lambda"] = *row.scores.tu_lambda;
    if (row.au_baseline) j["au_baseline"] = *row.au_baseline;
    out << j.dump() << "\n";
  }
}

std::vector<ScoreRow> read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("no scores at " + path + "; run the score stage first");
  std::vector<ScoreRow> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": invalid JSON");
    }
    ScoreRow row;
    row.scores.prompt_id = j.at("prompt_id").get<std::string>();
    row.scores.au = j.at("au").get<double>();
    if (j.contains("eu")) row.scores.eu = j["eu"].get<double>();
    if (j.contains("tu")) row.scores.tu = j["tu"].get<double>();
    if (j.contains("tu_lambda")) row.scores.tu_lambda = j["tu_lambda"].get<double>();
    if (j.contains("au_baseline")) row.au_baseline = j["au_baseline"].get<double>();
    rows.push_back(std::move(row));
  }
  return rows;
}

// Correctness of the reference model's first sample per prompt, thresholded.
std::map<std::string, bool> reference_labels(const std::vector<ResponseRecord>& records,
                                             const RunConfig& config) {
  std::map<std::string, const ResponseRecord*> first;
  for (const auto& rec : records) {
    if (rec.model_id != config.reference_model) continue;
    auto [it, inserted] = first.try_emplace(rec.prompt_id, &rec);
    if (!inserted && rec.sample_index < it->second->sample_index) it->second = &rec;
  }
  std::map<std::string, bool> labels;
  for (const auto& [prompt_id, rec] : first) {
    if (!rec->correctness) {
      throw MissingCorrectness("prompt " + prompt_id + ": reference response has no "
                               "correctness score; run the judge stage first");
    }
    labels[prompt_id] = *rec->correctness > config.correctness_threshold;
  }
  return labels;
}

SimilarityBackend make_backend(const RunConfig& config) {
  if (config.similarity == "embedding") return SimilarityBackend::embedding();
  if (config.similarity == "external") {
    if (config.external_matrix_path.empty()) {
      throw ConfigInvalid("similarity \"external\" needs external_matrix_path");
    }
    return SimilarityBackend::external_file(config.external_matrix_path);
  }
  throw ConfigInvalid("unknown similarity backend \"" + config.similarity + "\"");
}

// ---- stages ---------------------------------------------------------------

StageResult stage_ingest(const RunConfig& config, Manifest& manifest) {
  if (config.dataset_path.empty()) throw ConfigInvalid("dataset_path is not set");
  StageResult result{"ingest"};
  result.outputs = {"records.jsonl"};
  auto hash = stage_input_hash("ingest", manifest, {config.dataset_path});
  if (manifest.fresh("ingest", hash, result.outputs, run_dir(config))) {
    result.skipped = true;
    return result;
  }
  auto records = read_records(config.dataset_path);
  validate_records(records);
  write_records((run_dir(config) / "records.jsonl").string(), records);
  result.note = std::to_string(records.size()) + " records";
  manifest.record("ingest", hash, result.outputs);
  return result;
}

StageResult stage_embed(const RunConfig& config, Manifest& manifest) {
  StageResult result{"embed"};
  result.outputs = {"embedded.jsonl"};
  auto input = (run_dir(config) / "records.jsonl").string();
  if (!fs::exists(input)) {
    throw ConfigInvalid("no records.jsonl in " + config.output_dir +
                        "; run the ingest stage first");
  }
  auto hash = stage_input_hash("embed", manifest, {input});
  if (manifest.fresh("embed", hash, result.outputs, run_dir(config))) {
    result.skipped = true;
    return result;
  }
  auto records = read_records(input);
  std::vector<size_t> missing;
  std::vector<std::string> texts;
  for (size_t i = 0; i < records.size(); ++i) {
    if (!records[i].embedding) {
      missing.push_back(i);
      texts.push_back(records[i].text);
    }
  }
  if (!missing.empty()) {
    auto cache = ResponseCache::open((run_dir(config) / "embedding_cache.jsonl").string());
    EmbeddingClient client(config.embedding_endpoint, &cache);
    auto embeddings = client.embed_batch(texts);
    for (size_t k = 0; k < missing.size(); ++k) {
      records[missing[k]].embedding = std::move(embeddings[k]);
    }
  }
  validate_records(records);
  write_records((run_dir(config) / "embedded.jsonl").string(), records);
  result.note = std::to_string(missing.size()) + " embeddings fetched";
  manifest.record("embed", hash, result.outputs);
  return result;
}

StageResult stage_judge(const RunConfig& config, Manifest& manifest) {
  StageResult result{"judge"};
  result.outputs = {"judged.jsonl"};
  std::string input;
  for (const char* name : {"embedded.jsonl", "records.jsonl"}) {
    auto path = run_dir(config) / name;
    if (fs::exists(path)) {
      input = path.string();
      break;
    }
  }
  if (input.empty()) {
    throw ConfigInvalid("no records in " + config.output_dir + "; run the ingest stage first");
  }
  std::vector<std::string> hash_inputs = {input};
  if (!config.prompts_path.empty() && fs::exists(config.prompts_path)) {
    hash_inputs.push_back(config.prompts_path);
  }
  auto hash = stage_input_hash("judge", manifest, hash_inputs);
  if (manifest.fresh("judge", hash, result.outputs, run_dir(config))) {
    result.skipped = true;
    return result;
  }

  auto records = read_records(input);
  // First sample of every (prompt, model) pair that still lacks a judge score.
  std::map<std::pair<std::string, std::string>, size_t> firsts;
  for (size_t i = 0; i < records.size(); ++i) {
    auto key = std::make_pair(records[i].prompt_id, records[i].model_id);
    auto [it, inserted] = firsts.try_emplace(key, i);
    if (!inserted && records[i].sample_index < records[it->second].sample_index) {
      it->second = i;
    }
  }
  std::vector<size_t> pending;
  for (const auto& [key, index] : firsts) {
    if (!records[index].correctness) pending.push_back(index);
  }

  if (!pending.empty()) {
    if (config.prompts_path.empty()) {
      throw ConfigInvalid("judging needs prompts_path (JSONL with prompt_id, question, golds)");
    }
    auto info = load_prompt_info(config.prompts_path);
    std::vector<JudgeClient::Task> tasks;
    for (size_t index : pending) {
      auto it = info.find(records[index].prompt_id);
      if (it == info.end()) {
        throw MissingCorrectness("prompt " + records[index].prompt_id +
                                 " has no entry in " + config.prompts_path);
      }
      tasks.push_back({it->second.question, it->second.golds, records[index].text});
    }
    auto cache = ResponseCache::open((run_dir(config) / "judge_cache.jsonl").string());
    JudgeClient client(config.judge_endpoint, &cache);
    auto verdicts = client.judge_all(tasks);
    for (size_t k = 0; k < pending.size(); ++k) {
      records[pending[k]].correctness = verdicts[k].score;
    }
  }
  write_records((run_dir(config) / "judged.jsonl").string(), records);
  result.note = std::to_string(pending.size()) + " responses judged";
  manifest.record("judge", hash, result.outputs);
  return result;
}

StageResult stage_score(const RunConfig& config, Manifest& manifest) {
  StageResult result{"score"};
  result.outputs = {"scores.jsonl"};
  auto input = records_stage_file(config);
  std::vector<std::string> hash_inputs = {input};
  if (config.similarity == "external") hash_inputs.push_back(config.external_matrix_path);
  auto hash = stage_input_hash("score", manifest, hash_inputs);
  if (manifest.fresh("score", hash, result.outputs, run_dir(config))) {
    result.skipped = true;
    return result;
  }

  auto records = read_records(input);
  auto mode = config.lenient ? BundleMode::lenient : BundleMode::strict;
  auto bundles = assemble_bundles(records, config.reference_model, config.auxiliary_models,
                                  config.n, mode);
  auto backend = make_backend(config);
  std::optional<WeightedConfig> weighted;
  if (config.lambda) weighted = WeightedConfig{*config.lambda};

  std::vector<ScoreRow> rows(bundles.size());
  parallel_for(bundles.size(), config.workers, [&](size_t i) {
    auto scored = score_dataset({bundles[i]}, backend, weighted);
    rows[i].scores = std::move(scored.front());
  });

  if (config.au_baseline_samples) {
    auto baseline_bundles = assemble_bundles(records, config.reference_model, {},
                                             *config.au_baseline_samples, mode);
    std::map<std::string, double> baseline;
    std::mutex baseline_mutex;
    parallel_for(baseline_bundles.size(), config.workers, [&](size_t i) {
      auto scored = score_dataset({baseline_bundles[i]}, backend, std::nullopt);
      std::lock_guard<std::mutex> lock(baseline_mutex);
      baseline[scored.front().prompt_id] = scored.front().au;
    });
    for (auto& row : rows) {
      auto it = baseline.find(row.scores.prompt_id);
      if (it != baseline.end()) row.au_baseline = it->second;
    }
  }

  write_scores((run_dir(config) / "scores.jsonl").string(), rows);
  result.note = std::to_string(rows.size()) + " prompts scored";
  manifest.record("score", hash, result.outputs);
  return result;
}

std::vector<LabeledScore> variant_items(const std::vector<ScoreRow>& rows,
                                        const std::map<std::string, bool>& labels,
                                        const std::string& variant) {
  std::vector<LabeledScore> items;
  for (const auto& row : rows) {
    std::optional<double> value;
    if (variant == "au") value = row.scores.au;
    if (variant == "eu") value = row.scores.eu;
    if (variant == "tu") value = row.scores.tu;
    if (variant == "tu_lambda") value = row.scores.tu_lambda;
    if (variant == "au_baseline") value = row.au_baseline;
    if (!value) continue;
    auto it = labels.find(row.scores.prompt_id);
    if (it == labels.end()) {
      throw MissingCorrectness("prompt " + row.scores.prompt_id +
                               " is scored but has no correctness label; run the judge "
                               "stage first");
    }
    items.push_back({row.scores.prompt_id, *value, it->second});
  }
  return items;
}

StageResult stage_evaluate(const RunConfig& config, Manifest& manifest) {
  StageResult result{"evaluate"};
  result.outputs = {"evaluation.json", "evaluation.csv"};
  auto records_file = records_stage_file(config);
  auto scores_file = (run_dir(config) / "scores.jsonl").string();
  if (!fs::exists(scores_file)) {
    throw ConfigInvalid("no scores.jsonl in " + config.output_dir +
                        "; run the score stage first");
  }
  auto hash = stage_input_hash("evaluate", manifest, {records_file, scores_file});
  // Curve files depend on which variants exist, so freshness only tracks the
  // two fixed outputs.
  if (manifest.fresh("evaluate", hash, result.outputs, run_dir(config))) {
    result.skipped = true;
    return result;
  }

  auto rows = read_scores(scores_file);
  auto labels = reference_labels(read_records(records_file), config);

  BootstrapConfig bootstrap = config.bootstrap;
  bootstrap.seed = mix_seed(config.seed);

  std::vector<EvaluationReport> reports;
  for (const auto& variant : {"au", "eu", "tu", "tu_lambda", "au_baseline"}) {
    auto items = variant_items(rows, labels, variant);
    if (items.empty()) continue;
    reports.push_back(evaluate(variant, items, bootstrap, config.coverages));
  }
  if (reports.empty()) throw EmptyDataset("no score variants to evaluate");

  auto doc = evaluation_document(reports);
  ordered_json echo;
  echo["reference_model"] = config.reference_model;
  echo["auxiliary_models"] = config.auxiliary_models;
  echo["n"] = config.n;
  echo["similarity"] = config.similarity;
  echo["correctness_threshold"] = config.correctness_threshold;
  if (config.lambda) echo["lambda"] = *config.lambda;
  if (config.au_baseline_samples) echo["au_baseline_samples"] = *config.au_baseline_samples;
  ordered_json boot;
  boot["subsample_fraction"] = bootstrap.subsample_fraction;
  boot["iterations"] = bootstrap.iterations;
  boot["ci_level"] = bootstrap.ci_level;
  echo["bootstrap"] = boot;
  echo["seed"] = config.seed;
  doc["config"] = echo;

  ordered_json per_prompt = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json r;
    r["prompt_id"] = row.scores.prompt_id;
    auto it = labels.find(row.scores.prompt_id);
    if (it != labels.end()) r["correct"] = it->second;
    r["au"] = row.scores.au;
    if (row.scores.eu) r["eu"] = *row.scores.eu;
    if (row.scores.tu) r["tu"] = *row.scores.tu;
    if (row.scores.tu_lambda) r["tu_lambda"] = *row.scores.tu_lambda;
    if (row.au_baseline) r["au_baseline"] = *row.au_baseline;
    per_prompt.push_back(r);
  }
  doc["per_prompt"] = per_prompt;

  write_text_file((run_dir(config) / "evaluation.json").string(), doc.dump(2) + "\n");
  write_text_file((run_dir(config) / "evaluation.csv").string(), evaluation_csv(reports));
  for (const auto& report : reports) {
    auto curve_name = "risk_coverage_" + report.score_name + ".csv";
    auto roc_name = "roc_" + report.score_name + ".csv";
    write_text_file((run_dir(config) / curve_name).string(), risk_coverage_csv(report));
    write_text_file((run_dir(config) / roc_name).string(), roc_csv(report));
    result.outputs.push_back(curve_name);
    result.outputs.push_back(roc_name);
  }
  result.note = std::to_string(reports.size()) + " score variants";
  manifest.record("evaluate", hash, {"evaluation.json", "evaluation.csv"});
  return result;
}

StageResult stage_diagnose(const RunConfig& config, Manifest& manifest) {
  StageResult result{"diagnose"};
  result.outputs = {"diagnostics.json", "stratified.csv"};
  auto records_file = records_stage_file(config);
  auto scores_file = (run_dir(config) / "scores.jsonl").string();
  if (!fs::exists(scores_file)) {
    throw ConfigInvalid("no scores.jsonl in " + config.output_dir +
                        "; run the score stage first");
  }
  auto hash = stage_input_hash("diagnose", manifest, {records_file, scores_file});
  if (manifest.fresh("diagnose", hash, result.outputs, run_dir(config))) {
    result.skipped = true;
    return result;
  }

  auto rows = read_scores(scores_file);
  auto records = read_records(records_file);
  auto labels = reference_labels(records, config);

  std::vector<DiagnosticItem> items;
  for (const auto& row : rows) {
    if (!row.scores.eu) {
      throw ConfigInvalid("diagnostics need epistemic scores; score with at least one "
                          "auxiliary model");
    }
    auto it = labels.find(row.scores.prompt_id);
    if (it == labels.end()) {
      throw MissingCorrectness("prompt " + row.scores.prompt_id +
                               " has no correctness label; run the judge stage first");
    }
    items.push_back({row.scores.prompt_id, row.scores.au, *row.scores.eu, it->second});
  }

  auto stratified = stratify_by_au(items);
  auto slice = low_au_slice(items, config.low_au_fraction);
  auto mode = config.lenient ? BundleMode::lenient : BundleMode::strict;
  auto bundles = assemble_bundles(records, config.reference_model, config.auxiliary_models,
                                  config.n, mode);
  auto matrix = correctness_matrix(bundles, config.correctness_threshold);
  double jaccard = jaccard_redundancy(matrix);
  double gain = oracle_gain(matrix);

  write_text_file((run_dir(config) / "diagnostics.json").string(),
                  diagnostics_json(stratified, slice, jaccard, gain, matrix.model_ids.size()));
  write_text_file((run_dir(config) / "stratified.csv").string(), stratified_csv(stratified));
  manifest.record("diagnose", hash, result.outputs);
  return result;
}

StageResult stage_report(const RunConfig& config, Manifest& manifest) {
  StageResult result{"report"};
  result.outputs = {"report.json", "report.csv"};
  auto evaluation_file = (run_dir(config) / "evaluation.json").string();
  if (!fs::exists(evaluation_file)) {
    throw ConfigInvalid("no evaluation.json in " + config.output_dir +
                        "; run the evaluate stage first");
  }
  std::vector<std::string> hash_inputs = {evaluation_file};
  auto diagnostics_file = (run_dir(config) / "diagnostics.json").string();
  bool have_diagnostics = fs::exists(diagnostics_file);
  if (have_diagnostics) hash_inputs.push_back(diagnostics_file);
  auto hash = stage_input_hash("report", manifest, hash_inputs);
  if (manifest.fresh("report", hash, result.outputs, run_dir(config))) {
    result.skipped = true;
    return result;
  }

  ordered_json evaluation =
      ordered_json::parse(read_file_bytes(evaluation_file), nullptr, false);
  if (evaluation.is_discarded()) throw ParseError("evaluation.json is not valid JSON");
  ordered_json doc;
  doc["evaluation"] = evaluation;
  if (have_diagnostics) {
    ordered_json diagnostics =
        ordered_json::parse(read_file_bytes(diagnostics_file), nullptr, false);
    if (diagnostics.is_discarded()) throw ParseError("diagnostics.json is not valid JSON");
    doc["diagnostics"] = diagnostics;
  }
  write_text_file((run_dir(config) / "report.json").string(), doc.dump(2) + "\n");
  write_text_file((run_dir(config) / "report.csv").string(),
                  read_file_bytes((run_dir(config) / "evaluation.csv").string()));

  if (config.emit_charts && evaluation.contains("reports")) {
    std::vector<ChartSeries> risk_series, roc_series;
    for (const auto& report : evaluation["reports"]) {
      ChartSeries risk{report.value("score", "?"), {}};
      for (const auto& point : report.value("risk_coverage", ordered_json::array())) {
        risk.points.emplace_back(point[0].get<double>(), point[1].get<double>());
      }
      risk_series.push_back(std::move(risk));
      ChartSeries roc{report.value("score", "?"), {}};
      for (const auto& point : report.value("roc", ordered_json::array())) {
        roc.points.emplace_back(point[0].get<double>(), point[1].get<double>());
      }
      roc_series.push_back(std::move(roc));
    }
    write_text_file((run_dir(config) / "risk_coverage.svg").string(),
                    line_chart_svg("Risk vs coverage", "coverage", "risk", risk_series));
    write_text_file((run_dir(config) / "roc.svg").string(),
                    line_chart_svg("ROC", "false positive rate", "true positive rate",
                                   roc_series));
    result.outputs.push_back("risk_coverage.svg");
    result.outputs.push_back("roc.svg");
  }
  manifest.record("report", hash, {"report.json", "report.csv"});
  return result;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  json j = json::parse(read_file_bytes(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigInvalid(path + " is not a JSON object");
  require_keys(j,
               {"dataset_path", "prompts_path", "reference_model", "auxiliary_models", "n",
                "lenient", "au_baseline_samples", "similarity", "external_matrix_path",
                "lambda", "correctness_threshold", "coverages", "bootstrap",
                "embedding_endpoint", "judge_endpoint", "output_dir", "seed", "workers",
                "emit_charts", "low_au_fraction"},
               path);
  RunConfig config;
  config.dataset_path = j.value("dataset_path", config.dataset_path);
  config.prompts_path = j.value("prompts_path", config.prompts_path);
  config.reference_model = j.value("reference_model", config.reference_model);
  config.auxiliary_models = j.value("auxiliary_models", config.auxiliary_models);
  config.n = j.value("n", config.n);
  config.lenient = j.value("lenient", config.lenient);
  if (j.contains("au_baseline_samples") && !j["au_baseline_samples"].is_null()) {
    config.au_baseline_samples = j["au_baseline_samples"].get<int>();
  }
  config.similarity = j.value("similarity", config.similarity);
  config.external_matrix_path = j.value("external_matrix_path", config.external_matrix_path);
  if (j.contains("lambda") && !j["lambda"].is_null()) {
    config.lambda = j["lambda"].get<double>();
  }
  config.correctness_threshold = j.value("correctness_threshold", config.correctness_threshold);
  config.coverages = j.value("coverages", config.coverages);
  if (j.contains("bootstrap")) {
    const auto& b = j["bootstrap"];
    require_keys(b, {"subsample_fraction", "iterations", "ci_level"}, "bootstrap");
    config.bootstrap.subsample_fraction =
        b.value("subsample_fraction", config.bootstrap.subsample_fraction);
    config.bootstrap.iterations = b.value("iterations", config.bootstrap.iterations);
    config.bootstrap.ci_level = b.value("ci_level", config.bootstrap.ci_level);
  }
  if (j.contains("embedding_endpoint")) {
    config.embedding_endpoint = endpoint_from_json(j["embedding_endpoint"], "embedding_endpoint");
  }
  if (j.contains("judge_endpoint")) {
    config.judge_endpoint = endpoint_from_json(j["judge_endpoint"], "judge_endpoint");
  }
  config.output_dir = j.value("output_dir", config.output_dir);
  config.seed = j.value("seed", config.seed);
  config.workers = j.value("workers", config.workers);
  config.emit_charts = j.value("emit_charts", config.emit_charts);
  config.low_au_fraction = j.value("low_au_fraction", config.low_au_fraction);

  if (config.n < 1) throw ConfigInvalid("n must be >= 1");
  if (config.workers < 1) throw ConfigInvalid("workers must be >= 1");
  if (config.au_baseline_samples && *config.au_baseline_samples < 1) {
    throw ConfigInvalid("au_baseline_samples must be >= 1");
  }
  if (config.correctness_threshold < 0.0 || config.correctness_threshold >= 1.0) {
    throw ConfigInvalid("correctness_threshold must lie in [0, 1)");
  }
  return config;
}

std::string config_canonical_json(const RunConfig& config) {
  ordered_json j;
  j["dataset_path"] = config.dataset_path;
  j["prompts_path"] = config.prompts_path;
  j["reference_model"] = config.reference_model;
  j["auxiliary_models"] = config.auxiliary_models;
  j["n"] = config.n;
  j["lenient"] = config.lenient;
  j["au_baseline_samples"] =
      config.au_baseline_samples ? json(*config.au_baseline_samples) : json(nullptr);
  j["similarity"] = config.similarity;
  j["external_matrix_path"] = config.external_matrix_path;
  j["lambda"] = config.lambda ? json(*config.lambda) : json(nullptr);
  j["correctness_threshold"] = config.correctness_threshold;
  j["coverages"] = config.coverages;
  ordered_json boot;
  boot["subsample_fraction"] = config.bootstrap.subsample_fraction;
  boot["iterations"] = config.bootstrap.iterations;
  boot["ci_level"] = config.bootstrap.ci_level;
  j["bootstrap"] = boot;
  j["embedding_endpoint"] = endpoint_to_json(config.embedding_endpoint);
  j["judge_endpoint"] = endpoint_to_json(config.judge_endpoint);
  j["output_dir"] = config.output_dir;
  j["seed"] = config.seed;
  j["workers"] = config.workers;
  j["emit_charts"] = config.emit_charts;
  j["low_au_fraction"] = config.low_au_fraction;
  return j.dump();
}

BudgetCheck validate_budget(const RunConfig& config) {
  BudgetCheck check;
  if (!config.au_baseline_samples) {
    check.message = "no AU baseline configured; nothing to compare";
    return check;
  }
  check.requested = true;
  int ensemble = config.n * static_cast<int>(config.auxiliary_models.size());
  int baseline = *config.au_baseline_samples;
  check.matched = ensemble == baseline;
  std::string detail = "AU baseline uses " + std::to_string(baseline) +
                       " samples; the ensemble uses n*m = " + std::to_string(config.n) +
                       "*" + std::to_string(config.auxiliary_models.size()) + " = " +
                       std::to_string(ensemble);
  check.message = check.matched ? detail + "; budgets match"
                                : detail + "; budgets differ, comparison is not "
                                           "sample-matched";
  return check;
}

StageResult run_stage(const RunConfig& config, const std::string& stage) {
  fs::create_directories(run_dir(config));
  auto manifest = Manifest::open(config);
  StageResult result;
  if (stage == "ingest") {
    result = stage_ingest(config, manifest);
  } else if (stage == "embed") {
    result = stage_embed(config, manifest);
  } else if (stage == "judge") {
    result = stage_judge(config, manifest);
  } else if (stage == "score") {
    result = stage_score(config, manifest);
  } else if (stage == "evaluate") {
    result = stage_evaluate(config, manifest);
  } else if (stage == "diagnose") {
    result = stage_diagnose(config, manifest);
  } else if (stage == "report") {
    result = stage_report(config, manifest);
  } else {
    throw ConfigInvalid("unknown stage \"" + stage + "\"");
  }
  manifest.save();
  // A stale failure report from an earlier attempt would be misleading now.
  std::error_code ec;
  fs::remove(run_dir(config) / "error.json", ec);
  return result;
}

std::vector<StageResult> run_pipeline(const RunConfig& config,
                                      const std::vector<std::string>& stages) {
  std::vector<std::string> ordered;
  for (const auto& stage : kStageOrder) {
    if (std::find(stages.begin(), stages.end(), stage) != stages.end()) {
      ordered.push_back(stage);
    }
  }
  for (const auto& stage : stages) {
    if (std::find(kStageOrder.begin(), kStageOrder.end(), stage) == kStageOrder.end()) {
      throw ConfigInvalid("unknown stage \"" + stage + "\"");
    }
  }
  std::vector<StageResult> results;
  for (const auto& stage : ordered) results.push_back(run_stage(config, stage));
  return results;
}

StageResult run_simulate(const SynthConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto result = generate(config);
  StageResult stage{"simulate"};
  stage.outputs = {"synthetic.jsonl", "ground_truth.jsonl"};
  write_records((fs::path(out_dir) / "synthetic.jsonl").string(), result.records);

  std::ofstream truth((fs::path(out_dir) / "ground_truth.jsonl").string(), std::ios::binary);
  if (!truth) throw Error("cannot write ground_truth.jsonl");
  for (const auto& row : result.ground_truth) {
    ordered_json j;
    j["prompt_id"] = row.prompt_id;
    j["scenario"] = row.scenario;
    ordered_json homes;
    for (const auto& [model, cluster] : row.home_clusters) homes[model] = cluster;
    j["home_clusters"] = homes;
    ordered_json correct;
    for (const auto& [model, ok] : row.model_correct) correct[model] = ok;
    j["model_correct"] = correct;
    if (row.expected_au) j["expected_au"] = *row.expected_au;
    if (row.expected_tu) j["expected_tu"] = *row.expected_tu;
    if (row.expected_eu) j["expected_eu"] = *row.expected_eu;
    truth << j.dump() << "\n";
  }
  stage.note = std::to_string(result.records.size()) + " records across " +
               std::to_string(result.ground_truth.size()) + " prompts";
  return stage;
}

StageResult run_theory_check(const TheoryCheckConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto report = verify_lemma_bound(config.trials, config.max_outcomes, config.seed);

  // Spot-check the two-sided decomposition of the squared kernel distance on
  // independently drawn triples.
  double mmd_max_error = 0.0;
  std::mt19937_64 rng(mix_seed(config.seed ^ 0xABCDull));
  for (int t = 0; t < config.mmd_trials; ++t) {
    size_t dim = 2 + rng() % static_cast<std::uint64_t>(config.max_outcomes - 1);
    auto kernel = random_psd_kernel(dim, rng());
    auto p = random_distribution(dim, rng());
    auto q = random_distribution(dim, rng());
    double direct = mmd_squared(p, q, kernel);
    double split = one_sided_discrepancy(p, q, kernel) + one_sided_discrepancy(q, p, kernel);
    mmd_max_error = std::max(mmd_max_error, std::abs(direct - split));
  }

  ordered_json j;
  j["trials"] = report.trials;
  j["violations"] = report.violations;
  j["max_ratio"] = report.max_ratio;
  j["max_excess"] = report.max_excess;
  j["mmd_trials"] = config.mmd_trials;
  j["mmd_max_error"] = mmd_max_error;
  j["seed"] = config.seed;
  write_text_file((fs::path(out_dir) / "theory_check.json").string(), j.dump(2) + "\n");

  StageResult stage{"theory-check"};
  stage.outputs = {"theory_check.json"};
  stage.note = std::to_string(report.violations) + " violations in " +
               std::to_string(report.trials) + " trials";
  return stage;
}

std::string write_error_report(const std::string& out_dir, const std::string& stage,
                               const std::exception& error) {
  ordered_json j;
  j["stage"] = stage;
  j["error_type"] = error_type_name(error);
  j["message"] = error.what();
  std::string rendered = j.dump(2) + "\n";
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!ec) {
    std::ofstream out(fs::path(out_dir) / "error.json", std::ios::binary);
    if (out) out << rendered;
  }
  return rendered;
}

}  // namespace uq
