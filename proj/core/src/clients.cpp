#include "uqkit/clients.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "uqkit/error.hpp"
#include "uqkit/judge_prompt.hpp"
#include "uqkit/stats.hpp"

namespace uq {

namespace {

using nlohmann::json;

// 400s that complain about prompt length get special handling in the judge
// path (retry with truncated context), so they carry their own type.
class ContextLengthError : public Error {
 public:
  using Error::Error;
};

bool transient_status(int status) {
  return status == 408 || status == 429 || status == 500 || status == 502 ||
         status == 503 || status == 504;
}

bool mentions_length(const std::string& body) {
  auto lower = body;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return lower.find("length") != std::string::npos ||
         lower.find("context") != std::string::npos ||
         lower.find("too long") != std::string::npos;
}

std::chrono::milliseconds retry_delay(const EndpointConfig& config, int attempt,
                                      const httplib::Result& result) {
  if (result && result->has_header("Retry-After")) {
    char* end = nullptr;
    auto header = result->get_header_value("Retry-After");
    double seconds = std::strtod(header.c_str(), &end);
    if (end != header.c_str() && seconds >= 0.0 && seconds <= 60.0) {
      return std::chrono::milliseconds(static_cast<long>(seconds * 1000.0));
    }
  }
  auto delay = config.retry_initial_delay * (1L << std::min(attempt, 10));
  return std::min(delay, std::chrono::milliseconds(60000));
}

httplib::Headers build_headers(const EndpointConfig& config) {
  httplib::Headers headers;
  if (!config.api_key_env_var.empty()) {
    const char* key = std::getenv(config.api_key_env_var.c_str());
    if (key != nullptr && key[0] != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  return headers;
}

// One POST with the endpoint's retry policy. Each call builds its own
// httplib::Client so worker threads never share a connection.
json post_json(const EndpointConfig& config, const std::string& path, const json& body) {
  httplib::Client client(config.base_url);
  double timeout_s = std::chrono::duration<double>(config.timeout).count();
  client.set_connection_timeout(timeout_s);
  client.set_read_timeout(timeout_s);
  client.set_write_timeout(timeout_s);
  auto headers = build_headers(config);
  std::string payload = body.dump();

  int attempts = config.max_retries + 1;
  std::string last_failure = "no request issued";
  for (int attempt = 0; attempt < attempts; ++attempt) {
    auto result = client.Post(path, headers, payload, "application/json");
    if (!result) {
      last_failure = "transport failure: " + httplib::to_string(result.error());
    } else if (result->status == 401 || result->status == 403) {
      throw AuthError("endpoint " + config.base_url + path + " rejected credentials (" +
                      std::to_string(result->status) + ")");
    } else if (result->status == 400 && mentions_length(result->body)) {
      throw ContextLengthError("endpoint rejected the prompt as too long: " +
                               result->body.substr(0, 200));
    } else if (result->status >= 200 && result->status < 300) {
      json parsed = json::parse(result->body, nullptr, false);
      if (parsed.is_discarded()) {
        throw TransportError("endpoint returned unparsable JSON from " + path);
      }
      return parsed;
    } else if (!transient_status(result->status)) {
      throw TransportError("endpoint " + config.base_url + path + " returned " +
                           std::to_string(result->status) + ": " +
                           result->body.substr(0, 200));
    } else {
      last_failure = "status " + std::to_string(result->status);
    }
    if (attempt + 1 < attempts) {
      std::this_thread::sleep_for(retry_delay(config, attempt, result));
    }
  }
  if (last_failure.rfind("status 429", 0) == 0) {
    throw RateLimited("endpoint " + config.base_url + path + " rate limited after " +
                      std::to_string(attempts) + " attempts");
  }
  throw TransportError("endpoint " + config.base_url + path + " failed after " +
                       std::to_string(attempts) + " attempts (" + last_failure + ")");
}

// Runs fn(0..n_tasks) on up to `workers` threads; the first exception wins
// and stops the pool draining further tasks.
template <typename Fn>
void run_bounded(size_t n_tasks, int workers, Fn&& fn) {
  if (n_tasks == 0) return;
  size_t pool = std::min<size_t>(std::max(workers, 1), n_tasks);
  if (pool == 1) {
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

std::vector<std::vector<double>> parse_embeddings(const json& response, size_t expected) {
  if (!response.contains("data") || !response["data"].is_array()) {
    throw TransportError("embedding response has no data array");
  }
  std::vector<std::vector<double>> out(expected);
  std::vector<bool> seen(expected, false);
  size_t position = 0;
  for (const auto& entry : response["data"]) {
    size_t index = entry.contains("index") ? entry["index"].get<size_t>() : position;
    if (index >= expected || seen[index]) {
      throw TransportError("embedding response index out of range");
    }
    if (!entry.contains("embedding") || !entry["embedding"].is_array()) {
      throw TransportError("embedding response entry without embedding array");
    }
    out[index] = entry["embedding"].get<std::vector<double>>();
    seen[index] = true;
    ++position;
  }
  for (size_t i = 0; i < expected; ++i) {
    if (!seen[i]) throw TransportError("embedding response missing input " + std::to_string(i));
  }
  return out;
}

std::string embed_cache_key(const std::string& model, const std::string& text) {
  return fnv1a_hex("embed|" + model + "|" + text);
}

std::string judge_cache_key(const std::string& question,
                            const std::vector<std::string>& golds,
                            const std::string& answer) {
  std::string material = std::string(kJudgePromptVersion) + "|" + question + "|";
  for (const auto& gold : golds) {
    material += gold;
    material += '\x1e';
  }
  material += "|" + answer;
  return fnv1a_hex(material);
}

struct ExtractedVerdict {
  double score = 0.0;
  std::string justification;
};

// Accepts well-formed {"correctness_score": ...} replies and, failing that,
// scans for the first number after the key (the 20-token budget routinely
// cuts the JSON off mid-justification). Numbers outside [0, 1] are treated
// as garbage, not clamped.
std::optional<ExtractedVerdict> extract_verdict(const std::string& content) {
  json parsed = json::parse(content, nullptr, false);
  if (parsed.is_object() && parsed.contains("correctness_score")) {
    const auto& raw = parsed["correctness_score"];
    double score;
    if (raw.is_number()) {
      score = raw.get<double>();
    } else if (raw.is_string()) {
      const std::string text = raw.get<std::string>();
      char* end = nullptr;
      score = std::strtod(text.c_str(), &end);
      if (end == text.c_str()) return std::nullopt;
    } else {
      return std::nullopt;
    }
    if (score < -1e-9 || score > 1.0 + 1e-9) return std::nullopt;
    ExtractedVerdict verdict;
    verdict.score = score;
    if (parsed.contains("justification") && parsed["justification"].is_string()) {
      verdict.justification = parsed["justification"].get<std::string>();
    }
    return verdict;
  }

  size_t from = content.find("correctness_score");
  size_t start = from == std::string::npos ? 0 : from + 17;
  size_t pos = content.find_first_of("0123456789", start);
  if (pos == std::string::npos) return std::nullopt;
  if (pos > 0 && (content[pos - 1] == '-' || content[pos - 1] == '+')) --pos;
  char* end = nullptr;
  double score = std::strtod(content.c_str() + pos, &end);
  if (end == content.c_str() + pos) return std::nullopt;
  if (score < -1e-9 || score > 1.0 + 1e-9) return std::nullopt;
  ExtractedVerdict verdict;
  verdict.score = score;
  return verdict;
}

std::string halve(const std::string& text) {
  if (text.size() <= 64) return text;
  return text.substr(0, text.size() / 2);
}

}  // namespace

double snap_to_grid(double score) {
  score = std::clamp(score, 0.0, 1.0);
  return std::round(score * 10.0) / 10.0;
}

EmbeddingClient::EmbeddingClient(EndpointConfig config, ResponseCache* cache)
    : config_(std::move(config)), cache_(cache) {}

std::vector<std::vector<double>> EmbeddingClient::embed_batch(
    const std::vector<std::string>& texts, size_t batch_size) {
  if (texts.empty()) throw ConfigInvalid("embed_batch over an empty text list");
  if (batch_size == 0) throw ConfigInvalid("batch_size must be >= 1");
  for (const auto& text : texts) {
    if (text.empty()) throw ConfigInvalid("embed_batch with an empty text");
  }

  std::vector<std::vector<double>> results(texts.size());
  std::vector<size_t> misses;
  for (size_t i = 0; i < texts.size(); ++i) {
    if (cache_ != nullptr) {
      if (auto hit = cache_->find(embed_cache_key(config_.model_name, texts[i]))) {
        results[i] = hit->at("embedding").get<std::vector<double>>();
        continue;
      }
    }
    misses.push_back(i);
  }

  std::vector<std::vector<size_t>> batches;
  for (size_t offset = 0; offset < misses.size(); offset += batch_size) {
    size_t end = std::min(offset + batch_size, misses.size());
    batches.emplace_back(misses.begin() + offset, misses.begin() + end);
  }

  run_bounded(batches.size(), config_.max_concurrent_requests, [&](size_t b) {
    const auto& batch = batches[b];
    json body;
    body["model"] = config_.model_name;
    json input = json::array();
    for (size_t i : batch) input.push_back(texts[i]);
    body["input"] = input;
    auto response = post_json(config_, "/v1/embeddings", body);
    auto embeddings = parse_embeddings(response, batch.size());
    for (size_t k = 0; k < batch.size(); ++k) {
      results[batch[k]] = std::move(embeddings[k]);
      if (cache_ != nullptr) {
        json payload;
        payload["embedding"] = results[batch[k]];
        cache_->append(embed_cache_key(config_.model_name, texts[batch[k]]), payload);
      }
    }
  });

  size_t dim = results.front().size();
  for (size_t i = 0; i < results.size(); ++i) {
    if (results[i].empty()) throw TransportError("no embedding for input " + std::to_string(i));
    if (results[i].size() != dim) {
      throw DimensionDrift("embedding widths differ: " + std::to_string(dim) + " vs " +
                           std::to_string(results[i].size()) + " at input " +
                           std::to_string(i));
    }
  }
  return results;
}

JudgeClient::JudgeClient(EndpointConfig config, ResponseCache* cache)
    : config_(std::move(config)), cache_(cache) {}

JudgeVerdict JudgeClient::judge(const std::string& question,
                                const std::vector<std::string>& golds,
                                const std::string& answer) {
  if (golds.empty()) throw ConfigInvalid("judge needs at least one gold answer");

  std::string key = judge_cache_key(question, golds, answer);
  if (cache_ != nullptr) {
    if (auto hit = cache_->find(key)) {
      JudgeVerdict verdict;
      verdict.score = hit->at("score").get<double>();
      verdict.justification = hit->value("justification", std::string());
      verdict.raw_content = hit->value("raw", std::string());
      verdict.from_cache = true;
      return verdict;
    }
  }

  const int kAttempts = 3;
  std::string q = question;
  std::string a = answer;
  std::string last_content;
  for (int attempt = 1; attempt <= kAttempts; ++attempt) {
    json body;
    body["model"] = config_.model_name;
    json message;
    message["role"] = "user";
    message["content"] = build_judge_prompt(q, golds, a);
    body["messages"] = json::array({message});
    body["temperature"] = 0.0;
    body["max_tokens"] = 20;

    json response;
    try {
      response = post_json(config_, "/v1/chat/completions", body);
    } catch (const ContextLengthError&) {
      if (attempt == kAttempts) {
        throw TransportError("judge prompt still too long after truncation retries");
      }
      q = halve(q);
      a = halve(a);
      continue;
    }

    std::string content;
    try {
      content = response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw TransportError("chat response without choices[0].message.content");
    }
    last_content = content;
    if (auto extracted = extract_verdict(content)) {
      JudgeVerdict verdict;
      verdict.score = snap_to_grid(extracted->score);
      verdict.justification = extracted->justification;
      verdict.raw_content = content;
      verdict.attempts = attempt;
      if (cache_ != nullptr) {
        json payload;
        payload["score"] = verdict.score;
        payload["justification"] = verdict.justification;
        payload["raw"] = verdict.raw_content;
        cache_->append(key, payload);
      }
      return verdict;
    }
  }
  throw JudgeUnparseable("no parsable correctness score after " +
                         std::to_string(kAttempts) + " attempts; last reply: " +
                         last_content.substr(0, 160));
}

std::vector<JudgeVerdict> JudgeClient::judge_all(const std::vector<Task>& tasks) {
  std::vector<JudgeVerdict> verdicts(tasks.size());
  run_bounded(tasks.size(), config_.max_concurrent_requests, [&](size_t i) {
    verdicts[i] = judge(tasks[i].question, tasks[i].golds, tasks[i].answer);
  });
  return verdicts;
}

}  // namespace uq
