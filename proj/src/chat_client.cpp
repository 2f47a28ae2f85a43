#include "pba/chat_client.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "pba/errors.hpp"

namespace pba {

namespace {

struct Url {
  std::string scheme_host_port;
  std::string path;
};

Url split_url(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint \"" + endpoint + "\" lacks a scheme");
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

std::string single_attempt(const ChatRequest& request) {
  const Url url = split_url(request.endpoint);
  httplib::Client client(url.scheme_host_port);
  client.set_connection_timeout(request.timeout);
  client.set_read_timeout(request.timeout);
  client.set_write_timeout(request.timeout);

  nlohmann::json body = {
      {"model", request.model},
      {"temperature", request.temperature},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
  };
  httplib::Headers headers;
  if (!request.api_key.empty()) headers.emplace("Authorization", "Bearer " + request.api_key);

  auto response = client.Post(url.path, headers, body.dump(), "application/json");
  if (!response) {
    throw ProviderError(ProviderError::Kind::kTimeout, 0,
                        "request to " + request.endpoint + " failed: " + httplib::to_string(response.error()));
  }
  const int status = response->status;
  if (status == 401 || status == 403) {
    throw ProviderError(ProviderError::Kind::kAuth, status, "provider rejected credentials (HTTP " +
                                                                std::to_string(status) + ")");
  }
  if (status != 200) {
    throw ProviderError(ProviderError::Kind::kHttpStatus, status, "provider returned HTTP " + std::to_string(status));
  }
  auto parsed = nlohmann::json::parse(response->body, nullptr, false);
  try {
    if (!parsed.is_discarded()) {
      const auto& content = parsed.at("choices").at(0).at("message").at("content");
      if (content.is_string()) return content.get<std::string>();
    }
  } catch (const nlohmann::json::exception&) {
  }
  throw ProviderError(ProviderError::Kind::kMalformedResponse, status,
                      "response body lacks choices[0].message.content");
}

}  // namespace

std::string chat_completion(const ChatRequest& request, const RetryPolicy& retry, const Sleeper& sleep) {
  auto delay = retry.base_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      return single_attempt(request);
    } catch (const ProviderError& e) {
      if (!e.retryable() || attempt >= retry.max_tries) throw;
    }
    if (sleep) {
      sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
    delay = std::chrono::milliseconds(
        static_cast<std::chrono::milliseconds::rep>(std::llround(static_cast<double>(delay.count()) * retry.factor)));
  }
}

HttpChatProvider::HttpChatProvider(GenerationConfig config, Sleeper sleep)
    : config_(std::move(config)), sleep_(std::move(sleep)) {
  config_.validate();
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ProviderError(ProviderError::Kind::kAuth, 0,
                          "environment variable " + config_.api_key_env + " is not set");
    }
    api_key_ = key;
  }
}

std::string HttpChatProvider::complete(const std::string& prompt) {
  ChatRequest request{config_.endpoint, config_.model, prompt, config_.temperature, config_.timeout, api_key_};
  return chat_completion(request, config_.retry, sleep_);
}

ReplayProvider::ReplayProvider(std::vector<std::string> payloads) : payloads_(std::move(payloads)) {}

std::unique_ptr<ReplayProvider> ReplayProvider::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open replay file " + path);
  std::vector<std::string> payloads;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto object = nlohmann::json::parse(line, nullptr, false);
    if (object.is_discarded() || !object.is_object() || !object.contains("text") || !object["text"].is_string()) {
      throw DataError("replay line " + std::to_string(line_no) + " lacks a string \"text\" field");
    }
    payloads.push_back(object["text"].get<std::string>());
  }
  return std::make_unique<ReplayProvider>(std::move(payloads));
}

std::string ReplayProvider::complete(const std::string&) {
  std::lock_guard lock(mutex_);
  if (next_ >= payloads_.size()) {
    throw ProviderError(ProviderError::Kind::kExhausted, 0, "replay file exhausted");
  }
  return payloads_[next_++];
}

}  // namespace pba
