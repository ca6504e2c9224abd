#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace uq {

// Append-only JSONL response cache: one {"key": ..., "payload": ...} object
// per line, last entry for a key wins. Lets re-runs of the embed and judge
// stages finish without issuing a single network call. Single-writer; append
// is safe to call from the client worker threads.
class ResponseCache {
 public:
  ResponseCache() = default;

  // Loads existing entries if the file exists; either way, later appends go
  // to `path`.
  static ResponseCache open(const std::string& path);

  std::optional<nlohmann::json> find(const std::string& key) const;
  void append(const std::string& key, const nlohmann::json& payload);

  size_t size() const { return entries_.size(); }

 private:
  std::string path_;
  std::map<std::string, nlohmann::json> entries_;
  // Behind a pointer so the cache stays movable.
  mutable std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
};

}  // namespace uq
