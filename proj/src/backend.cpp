#include "avalon/backend.hpp"

#include <cstdlib>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "httplib.h"

namespace avalon {

using nlohmann::json;

std::string_view to_string(ChatError::Code c) {
  switch (c) {
    case ChatError::Code::Timeout: return "Timeout";
    case ChatError::Code::HttpError: return "HttpError";
    case ChatError::Code::RateLimited: return "RateLimited";
    case ChatError::Code::FixtureExhausted: return "FixtureExhausted";
    case ChatError::Code::MissingCredential: return "MissingCredential";
    case ChatError::Code::BadResponse: return "BadResponse";
  }
  return "?";
}

int rough_tokens(const std::vector<ChatMessage>& messages) {
  int n = 0;
  for (const auto& m : messages) {
    std::istringstream in(m.content);
    std::string w;
    while (in >> w) ++n;
  }
  return n;
}

void MockBackend::enqueue(PromptName prompt, std::string reply) {
  std::lock_guard lock(mu_);
  queues_[prompt].push_back(std::move(reply));
}

void MockBackend::load_fixtures(std::string_view jsonl) {
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      enqueue(prompt_name_from_string(j.at("prompt").get<std::string>()),
              j.at("reply").get<std::string>());
    } catch (const std::exception& e) {
      throw std::runtime_error("fixture line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::size_t MockBackend::pending(PromptName prompt) const {
  std::lock_guard lock(mu_);
  auto it = queues_.find(prompt);
  return it == queues_.end() ? 0 : it->second.size();
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
  std::unique_lock lock(mu_);
  requests_.push_back(request);
  auto& q = queues_[request.prompt];
  if (q.empty()) {
    if (fallback_) {
      lock.unlock();
      return fallback_->complete(request);
    }
    throw ChatError(ChatError::Code::FixtureExhausted,
                    "no fixture left for prompt '" + std::string(to_string(request.prompt)) + "'");
  }
  ChatResponse r;
  r.text = std::move(q.front());
  q.pop_front();
  r.prompt_tokens = rough_tokens(request.messages);
  r.completion_tokens = rough_tokens({{"assistant", r.text}});
  return r;
}

RateLimiter::RateLimiter(double requests_per_second)
    : interval_(requests_per_second > 0
                    ? std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>(1.0 / requests_per_second))
                    : std::chrono::steady_clock::duration::zero()),
      next_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (interval_ == std::chrono::steady_clock::duration::zero()) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

HttpBackendConfig HttpBackendConfig::from_env(std::string* model) {
  HttpBackendConfig c;
  if (const char* v = std::getenv("AVALON_API_BASE")) c.base_url = v;
  if (const char* v = std::getenv("AVALON_API_KEY")) c.api_key = v;
  if (model) {
    if (const char* v = std::getenv("AVALON_MODEL")) *model = v;
  }
  return c;
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config, std::shared_ptr<RateLimiter> limiter)
    : config_(std::move(config)), limiter_(std::move(limiter)) {
  if (config_.base_url.empty()) {
    throw ChatError(ChatError::Code::MissingCredential, "no endpoint configured (AVALON_API_BASE)");
  }
  if (config_.api_key.empty()) {
    throw ChatError(ChatError::Code::MissingCredential, "no credential configured (AVALON_API_KEY)");
  }
  sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

ChatResponse HttpChatBackend::complete(const ChatRequest& request) {
  json body = {{"model", request.model}, {"temperature", request.temperature}};
  body["messages"] = json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  const std::string payload = body.dump();

  httplib::Client cli(config_.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  cli.set_connection_timeout(secs);
  cli.set_read_timeout(secs);
  cli.set_write_timeout(secs);
  httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};

  std::chrono::milliseconds backoff = config_.initial_backoff;
  std::optional<ChatError> last;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      sleep(backoff);
      backoff *= 2;
    }
    if (limiter_) limiter_->acquire();
    const auto start = std::chrono::steady_clock::now();
    auto res = cli.Post(config_.path, headers, payload, "application/json");
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!res) {
      last = ChatError(ChatError::Code::Timeout,
                       "request failed: " + httplib::to_string(res.error()));
      continue;
    }
    if (res->status == 429) {
      last = ChatError(ChatError::Code::RateLimited, "rate limited", 429);
      continue;
    }
    if (res->status >= 500) {
      last = ChatError(ChatError::Code::HttpError, "server error " + std::to_string(res->status),
                       res->status);
      continue;
    }
    if (res->status != 200) {
      throw ChatError(ChatError::Code::HttpError,
                      "HTTP " + std::to_string(res->status) + ": " + res->body, res->status);
    }
    try {
      json j = json::parse(res->body);
      ChatResponse out;
      out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
      out.latency_ms = ms;
      if (j.contains("usage")) {
        out.prompt_tokens = j["usage"].value("prompt_tokens", 0);
        out.completion_tokens = j["usage"].value("completion_tokens", 0);
      } else {
        out.prompt_tokens = rough_tokens(request.messages);
        out.completion_tokens = rough_tokens({{"assistant", out.text}});
      }
      return out;
    } catch (const json::exception& e) {
      throw ChatError(ChatError::Code::BadResponse, std::string("malformed completion: ") + e.what());
    }
  }
  throw *last;
}

}  // namespace avalon
