#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "pba/generation.hpp"

namespace pba {

struct ChatRequest {
  std::string endpoint;
  std::string model;
  std::string prompt;
  double temperature = 1.0;
  std::chrono::milliseconds timeout{120000};
  std::string api_key;  // sent as a bearer token when non-empty
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// One chat-completions request; returns the assistant message verbatim.
// Retries timeouts, 429, 5xx and malformed bodies with exponential backoff.
std::string chat_completion(const ChatRequest& request, const RetryPolicy& retry = {},
                            const Sleeper& sleep = {});

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  // Safe to call concurrently.
  virtual std::string complete(const std::string& prompt) = 0;
};

class HttpChatProvider : public CompletionProvider {
 public:
  // Reads the API key from config.api_key_env; missing key is an auth error.
  explicit HttpChatProvider(GenerationConfig config, Sleeper sleep = {});
  std::string complete(const std::string& prompt) override;

 private:
  GenerationConfig config_;
  std::string api_key_;
  Sleeper sleep_;
};

// Replays recorded response bodies in order, one per call. Lines of the
// replay file are JSON objects with a "text" field.
class ReplayProvider : public CompletionProvider {
 public:
  explicit ReplayProvider(std::vector<std::string> payloads);
  static std::unique_ptr<ReplayProvider> from_file(const std::string& path);
  std::string complete(const std::string& prompt) override;

 private:
  std::mutex mutex_;
  std::vector<std::string> payloads_;
  std::size_t next_ = 0;
};

}  // namespace pba
