/*
 * Copyright 2026 The flowc Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// OpenAI-compatible and Anthropic-style chat dialects over cpp-httplib.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>

#include "flowc/llmgate.hpp"

namespace flowc {
namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + url + "' lacks a scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string resolve_secret(const std::string& ref) {
  if (ref.empty()) return {};
  const std::string var = ref.substr(4);  // after "env:"
  const char* value = std::getenv(var.c_str());
  if (value == nullptr || *value == '\0')
    throw AuthError("environment variable '" + var + "' is not set");
  return value;
}

Json openai_body(const ProviderConfig& config, const ChatRequest& request) {
  Json body;
  body["model"] = config.model_name;
  body["messages"] = Json::array();
  for (const auto& m : request.messages)
    body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output_tokens;
  if (request.seed) body["seed"] = *request.seed;
  return body;
}

Json anthropic_body(const ProviderConfig& config, const ChatRequest& request) {
  Json body;
  body["model"] = config.model_name;
  body["max_tokens"] = request.max_output_tokens;
  body["temperature"] = request.temperature;
  Json messages = Json::array();
  for (const auto& m : request.messages) {
    if (m.role == ChatRole::kSystem) {
      body["system"] = m.content;
      continue;
    }
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  // The messages API requires the first turn to be a user turn.
  if (messages.empty() || messages.front()["role"] != "user") {
    messages.insert(messages.begin(), Json{{"role", "user"}, {"content", "(conversation start)"}});
  }
  body["messages"] = std::move(messages);
  return body;
}

RawReply parse_openai(const std::string& raw) {
  try {
    const auto j = Json::parse(raw);
    RawReply r;
    r.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      const auto& u = j["usage"];
      if (u.contains("prompt_tokens")) r.input_tokens = u["prompt_tokens"].get<std::int64_t>();
      if (u.contains("completion_tokens"))
        r.output_tokens = u["completion_tokens"].get<std::int64_t>();
    }
    return r;
  } catch (const Json::exception& e) {
    throw MalformedResponse(std::string("unparseable chat completion: ") + e.what(), raw);
  }
}

RawReply parse_anthropic(const std::string& raw) {
  try {
    const auto j = Json::parse(raw);
    RawReply r;
    bool found = false;
    for (const auto& block : j.at("content")) {
      if (block.value("type", std::string()) == "text") {
        r.content += block.at("text").get<std::string>();
        found = true;
      }
    }
    if (!found) throw MalformedResponse("response has no text content block", raw);
    if (j.contains("usage") && j["usage"].is_object()) {
      const auto& u = j["usage"];
      if (u.contains("input_tokens")) r.input_tokens = u["input_tokens"].get<std::int64_t>();
      if (u.contains("output_tokens")) r.output_tokens = u["output_tokens"].get<std::int64_t>();
    }
    return r;
  } catch (const Json::exception& e) {
    throw MalformedResponse(std::string("unparseable messages response: ") + e.what(), raw);
  }
}

class HttpTransport : public Transport {
 public:
  explicit HttpTransport(ProviderConfig config)
      : config_(std::move(config)), url_(split_url(config_.endpoint)) {}

  RawReply send(const ChatRequest& request) override {
    const std::string secret = resolve_secret(config_.auth);
    httplib::Headers headers;
    Json body;
    if (config_.kind == ProviderKind::kAnthropicHttp) {
      if (!secret.empty()) headers.emplace("x-api-key", secret);
      headers.emplace("anthropic-version", "2023-06-01");
      body = anthropic_body(config_, request);
    } else {
      if (!secret.empty()) headers.emplace("Authorization", "Bearer " + secret);
      body = openai_body(config_, request);
    }

    httplib::Client client(url_.origin);
    const auto timeout_s = config_.timeout_ms / 1000;
    const auto timeout_us = (config_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(timeout_s, timeout_us);
    client.set_read_timeout(timeout_s, timeout_us);
    client.set_write_timeout(timeout_s, timeout_us);

    auto res = client.Post(url_.path, headers, body.dump(), "application/json");
    if (!res) {
      throw TransientFailure("request to " + config_.endpoint +
                             " failed: " + httplib::to_string(res.error()));
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
      throw AuthError("provider rejected credentials (HTTP " + std::to_string(status) + ")");
    }
    if (status == 408 || status == 429 || status >= 500) {
      throw TransientFailure("HTTP " + std::to_string(status));
    }
    if (status < 200 || status >= 300) {
      throw TransportError("HTTP " + std::to_string(status) + ": " + res->body);
    }
    return config_.kind == ProviderKind::kAnthropicHttp ? parse_anthropic(res->body)
                                                        : parse_openai(res->body);
  }

 private:
  ProviderConfig config_;
  Url url_;
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(const ProviderConfig& config) {
  return std::make_unique<HttpTransport>(config);
}

}  // namespace flowc
