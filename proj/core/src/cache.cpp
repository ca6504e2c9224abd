#include "uqkit/cache.hpp"

#include <fstream>

#include "uqkit/error.hpp"

namespace uq {

ResponseCache ResponseCache::open(const std::string& path) {
  ResponseCache cache;
  cache.path_ = path;
  std::ifstream in(path);
  if (!in) return cache;  // fresh cache
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("key")) {
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ": malformed cache entry");
    }
    cache.entries_[j["key"].get<std::string>()] = j.value("payload", nlohmann::json());
  }
  return cache;
}

std::optional<nlohmann::json> ResponseCache::find(const std::string& key) const {
  std::lock_guard<std::mutex> lock(*mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::append(const std::string& key, const nlohmann::json& payload) {
  std::lock_guard<std::mutex> lock(*mutex_);
  entries_[key] = payload;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to cache " + path_);
  nlohmann::json line;
  line["key"] = key;
  line["payload"] = payload;
  out << line.dump() << "\n";
}

}  // namespace uq
