#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "uqkit/clients.hpp"

namespace stub {

// In-process OpenAI-style endpoint with scripted responses. Handlers receive
// the 0-based index of the call so a script can fail the first two requests
// and succeed on the third. The server also tracks the bodies it saw and the
// peak number of requests in flight.
class StubServer {
 public:
  using Handler =
      std::function<void(int call, const httplib::Request&, httplib::Response&)>;

  StubServer() {
    server_.Post("/v1/embeddings",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   dispatch(embeddings_, req, res);
                 });
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   dispatch(chat_, req, res);
                 });
  }

  ~StubServer() { stop(); }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  void on_embeddings(Handler handler) { embeddings_ = std::move(handler); }
  void on_chat(Handler handler) { chat_ = std::move(handler); }

  // Holds every handler inside the response for this long; lets tests force
  // requests to overlap when probing the concurrency bound.
  void set_handler_delay(std::chrono::milliseconds delay) { delay_ = delay; }

  int request_count() const { return requests_.load(); }
  int peak_concurrency() const { return peak_.load(); }

  std::vector<std::string> bodies() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return bodies_;
  }

  std::vector<std::string> auth_headers() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return auth_;
  }

  // Canned handler: one embedding per input, every value equal to the text
  // length, width `dim`. Deterministic per text, so cache comparisons hold.
  static Handler echo_embeddings(size_t dim = 3) {
    return [dim](int, const httplib::Request& req, httplib::Response& res) {
      auto body = nlohmann::json::parse(req.body);
      nlohmann::json data = nlohmann::json::array();
      size_t index = 0;
      for (const auto& text : body.at("input")) {
        nlohmann::json entry;
        entry["index"] = index++;
        entry["embedding"] =
            std::vector<double>(dim, double(text.get<std::string>().size()));
        data.push_back(entry);
      }
      nlohmann::json out;
      out["data"] = data;
      res.set_content(out.dump(), "application/json");
    };
  }

  // Canned handler: chat completion whose assistant message is `content`.
  static Handler fixed_chat(std::string content) {
    return [content = std::move(content)](int, const httplib::Request&,
                                          httplib::Response& res) {
      res.set_content(chat_body(content), "application/json");
    };
  }

  static std::string chat_body(const std::string& content) {
    nlohmann::json message;
    message["content"] = content;
    nlohmann::json choice;
    choice["message"] = message;
    nlohmann::json out;
    out["choices"] = nlohmann::json::array({choice});
    return out.dump();
  }

 private:
  void dispatch(Handler& handler, const httplib::Request& req, httplib::Response& res) {
    int call = requests_.fetch_add(1);
    int active = active_.fetch_add(1) + 1;
    int peak = peak_.load();
    while (active > peak && !peak_.compare_exchange_weak(peak, active)) {
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      bodies_.push_back(req.body);
      auth_.push_back(req.get_header_value("Authorization"));
    }
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    if (handler) {
      handler(call, req, res);
    } else {
      res.status = 404;
    }
    active_.fetch_sub(1);
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  Handler embeddings_;
  Handler chat_;
  std::chrono::milliseconds delay_{0};
  std::atomic<int> requests_{0};
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
  mutable std::mutex mutex_;
  std::vector<std::string> bodies_;
  std::vector<std::string> auth_;
};

// Endpoint config pointed at the stub, with retry delays shrunk so failure
// scripts finish in milliseconds.
inline uq::EndpointConfig test_endpoint(const StubServer& server) {
  uq::EndpointConfig config;
  config.base_url = server.base_url();
  config.model_name = "stub-model";
  config.timeout = std::chrono::milliseconds(5000);
  config.retry_initial_delay = std::chrono::milliseconds(1);
  return config;
}

}  // namespace stub
