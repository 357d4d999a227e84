#pragma once

// OpenAI-compatible chat-completions client over cpp-httplib.

#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "kalma/error.hpp"
#include "kalma/judges.hpp"

namespace kalma {

struct EndpointUrl {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/v1/chat/completions"
};

// Base URL plus "/chat/completions" unless the URL already ends with it.
inline EndpointUrl parse_endpoint(const std::string& url) {
  size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint without scheme: " + url);
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw std::invalid_argument("unsupported endpoint scheme: " + url);
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") {
    throw std::invalid_argument("https endpoint needs a build with KALMA_WITH_TLS=ON: " + url);
  }
#endif
  size_t path_start = url.find('/', scheme_end + 3);
  EndpointUrl e;
  e.scheme_host_port = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  const std::string suffix = "/chat/completions";
  if (path.size() < suffix.size() || path.compare(path.size() - suffix.size(), suffix.size(), suffix) != 0) {
    path += suffix;
  }
  e.path = path;
  return e;
}

class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(JudgeConfig config) : config_(std::move(config)), url_(parse_endpoint(config_.endpoint)) {
    validate_judge_config(config_);
    if (const char* k = std::getenv(config_.api_key_env.c_str())) {
      api_key_ = k;
    } else if (const char* k2 = std::getenv("OPENAI_API_KEY")) {
      api_key_ = k2;
    }
  }

  std::string complete(const ChatRequest& request) override {
    Slot slot(*this);
    std::string body = request.to_json().dump();
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
      if (attempt > 1) std::this_thread::sleep_for(config_.backoff * (1 << (attempt - 2)));
      httplib::Client cli(url_.scheme_host_port);
      auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
      auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout).count() % 1000000;
      cli.set_connection_timeout(secs, usecs);
      cli.set_read_timeout(secs, usecs);
      cli.set_write_timeout(secs, usecs);
      httplib::Headers headers;
      if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
      auto res = cli.Post(url_.path, headers, body, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw JudgeError(identity() + ": HTTP " + std::to_string(res->status) + " after " +
                         std::to_string(attempt) + " attempt(s): " + res->body.substr(0, 500));
      }
      return extract_content(res->body);
    }
    throw JudgeError(identity() + ": giving up after " + std::to_string(config_.max_attempts) +
                     " attempt(s): " + last_error);
  }

  std::string identity() const override { return config_.endpoint + "#" + config_.model_name; }

  // choices[0].message.content; anything else is an error, never "".
  static std::string extract_content(const std::string& body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) throw JudgeError("malformed endpoint response (not JSON): " + body.substr(0, 200));
    const nlohmann::json* content = nullptr;
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
      const auto& c0 = j["choices"][0];
      if (c0.contains("message") && c0["message"].contains("content")) content = &c0["message"]["content"];
    }
    if (!content || !content->is_string()) {
      throw JudgeError("malformed endpoint response (no choices[0].message.content): " + body.substr(0, 200));
    }
    return content->get<std::string>();
  }

 private:
  // Caps concurrent requests at max_inflight.
  class Slot {
   public:
    explicit Slot(HttpChatClient& c) : c_(c) {
      std::unique_lock<std::mutex> lock(c_.mu_);
      c_.cv_.wait(lock, [&] { return c_.inflight_ < c_.config_.max_inflight; });
      ++c_.inflight_;
    }
    ~Slot() {
      {
        std::lock_guard<std::mutex> lock(c_.mu_);
        --c_.inflight_;
      }
      c_.cv_.notify_one();
    }

   private:
    HttpChatClient& c_;
  };

  JudgeConfig config_;
  EndpointUrl url_;
  std::string api_key_;
  std::mutex mu_;
  std::condition_variable cv_;
  size_t inflight_ = 0;
};

}  // namespace kalma
