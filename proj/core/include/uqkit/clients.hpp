#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "uqkit/cache.hpp"

namespace uq {

// Connection settings for one OpenAI-compatible endpoint.
//
// Wire formats, byte for byte:
//
//   POST {base_url}/v1/embeddings
//   -> {"model": "...", "input": ["text", ...]}
//   <- {"data": [{"index": 0, "embedding": [0.1, ...]}, ...]}
//
//   POST {base_url}/v1/chat/completions
//   -> {"model": "...", "messages": [{"role": "user", "content": "..."}],
//       "temperature": 0.0, "max_tokens": 20}
//   <- {"choices": [{"message": {"content": "..."}}]}
//
// If api_key_env_var names an environment variable with a value, requests
// carry "Authorization: Bearer <value>".
struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string api_key_env_var;
  std::string model_name;
  std::chrono::milliseconds timeout{30000};
  int max_concurrent_requests = 4;
  int max_retries = 3;
  // First retry waits this long, doubling per attempt; a numeric Retry-After
  // header overrides the computed delay.
  std::chrono::milliseconds retry_initial_delay{250};
};

// Nearest point of the judge's discrete score grid {0.0, 0.1, ..., 1.0}.
double snap_to_grid(double score);

class EmbeddingClient {
 public:
  explicit EmbeddingClient(EndpointConfig config, ResponseCache* cache = nullptr);

  // Embeds texts in their given order, splitting into request batches of
  // `batch_size` and keeping at most max_concurrent_requests in flight.
  // Cached texts never reach the network. Throws AuthError on 401/403,
  // RateLimited when 429s outlast the retry budget, TransportError for other
  // failures, and DimensionDrift when the endpoint returns mixed widths.
  std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts,
                                               size_t batch_size = 64);

 private:
  EndpointConfig config_;
  ResponseCache* cache_;
};

struct JudgeVerdict {
  double score = 0.0;  // snapped to the 0.1 grid
  std::string justification;
  std::string raw_content;
  int attempts = 1;
  bool from_cache = false;
};

class JudgeClient {
 public:
  explicit JudgeClient(EndpointConfig config, ResponseCache* cache = nullptr);

  // Scores one answer against its golds with the fixed judge prompt at
  // temperature 0. Malformed replies are retried up to 3 total attempts
  // (JudgeUnparseable after that); context-length rejections retry with the
  // question and answer halved. Truncated-but-started JSON still yields a
  // score via first-number extraction.
  JudgeVerdict judge(const std::string& question, const std::vector<std::string>& golds,
                     const std::string& answer);

  struct Task {
    std::string question;
    std::vector<std::string> golds;
    std::string answer;
  };

  // Bounded fan-out over many judgments; results align with tasks.
  std::vector<JudgeVerdict> judge_all(const std::vector<Task>& tasks);

 private:
  EndpointConfig config_;
  ResponseCache* cache_;
};

}  // namespace uq
