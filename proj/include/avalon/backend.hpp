#pragma once

// Chat-completion backends. Everything the harness sends to a model goes
// through ChatBackend::complete, so the HTTP client, the fixture-queue mock
// and the synthetic responder are interchangeable.

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "avalon/prompts.hpp"
#include "avalon/types.hpp"

namespace avalon {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  PromptName prompt = PromptName::System;
  Seat seat = kNoSeat;
  std::string model;
  double temperature = 0.8;
  std::vector<ChatMessage> messages;
};

struct ChatResponse {
  std::string text;
  double latency_ms = 0.0;
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

class ChatError : public std::runtime_error {
 public:
  enum class Code { Timeout, HttpError, RateLimited, FixtureExhausted, MissingCredential, BadResponse };
  ChatError(Code code, const std::string& what, int status = 0)
      : std::runtime_error(what), code_(code), status_(status) {}
  Code code() const noexcept { return code_; }
  int status() const noexcept { return status_; }

 private:
  Code code_;
  int status_;
};

std::string_view to_string(ChatError::Code c);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Replies come from per-prompt FIFO queues. When a queue is empty the
// optional fallback backend answers; without one, FixtureExhausted.
class MockBackend : public ChatBackend {
 public:
  MockBackend() = default;
  explicit MockBackend(std::shared_ptr<ChatBackend> fallback) : fallback_(std::move(fallback)) {}

  void enqueue(PromptName prompt, std::string reply);
  // JSONL lines: {"prompt": "vote", "reply": "..."}; throws on bad lines.
  void load_fixtures(std::string_view jsonl);
  std::size_t pending(PromptName prompt) const;

  ChatResponse complete(const ChatRequest& request) override;

  // Every request seen, in order.
  const std::vector<ChatRequest>& requests() const { return requests_; }

 private:
  mutable std::mutex mu_;
  std::map<PromptName, std::deque<std::string>> queues_;
  std::shared_ptr<ChatBackend> fallback_;
  std::vector<ChatRequest> requests_;
};

// Deterministic stand-in for a language model: reads the rendered prompt
// (options, team sizes, role line) and answers in the fenced format, with
// a configurable share of malformed first replies to exercise retries.
class SyntheticBackend : public ChatBackend {
 public:
  struct Options {
    std::uint64_t seed = 0;
    double malformed_rate = 0.1;
    double agree_rate = 0.65;
    double evil_fail_rate = 0.75;
    double team_change_rate = 0.4;
    double intent_change_rate = 0.3;
  };

  explicit SyntheticBackend(Options options);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  std::string answer(const ChatRequest& request, bool retry);

  Options options_;
  std::uint64_t counter_ = 0;
  std::mutex mu_;
};

// Global ceiling on request rate shared by every game using one endpoint.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_;
};

struct HttpBackendConfig {
  std::string base_url;  // e.g. https://api.openai.com
  std::string path = "/v1/chat/completions";
  std::string api_key;
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds timeout{60000};
  double requests_per_second = 0.0;  // 0 = unlimited

  // AVALON_API_BASE, AVALON_API_KEY, AVALON_MODEL (model returned via *model).
  static HttpBackendConfig from_env(std::string* model = nullptr);
};

// OpenAI-compatible chat completions over HTTP(S), with exponential backoff
// on timeouts, 429 and 5xx responses.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config,
                           std::shared_ptr<RateLimiter> limiter = nullptr);
  ChatResponse complete(const ChatRequest& request) override;

  // Hook for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;

 private:
  HttpBackendConfig config_;
  std::shared_ptr<RateLimiter> limiter_;
};

// Approximate token count (whitespace-separated words) used when the
// endpoint does not report usage.
int rough_tokens(const std::vector<ChatMessage>& messages);

}  // namespace avalon
