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

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowc/error.hpp"
#include "flowc/io.hpp"

namespace flowc {

enum class ChatRole { kSystem, kUser, kAssistant };
std::string_view to_string(ChatRole role);

struct ChatMessage {
  ChatRole role = ChatRole::kUser;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  std::string tag;  // accounting label, e.g. "agent", "route", "judge"
  std::optional<std::uint64_t> seed;

  /// Throws std::invalid_argument if the request breaks its invariants.
  void check() const;
};

struct ChatResponse {
  std::string content;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double latency_ms = 0;
  std::string provider;
  bool tokens_estimated = false;
  int attempts = 1;
};

enum class ProviderKind { kOpenAiHttp, kAnthropicHttp, kScripted };

struct RetryPolicy {
  int max_attempts = 3;
  int base_backoff_ms = 500;
};

// A scripted provider answers without any network access. Reply selection
// per call, in order:
//   1. the first `fail_first` calls fail with `failure`;
//   2. queued `replies` (wrapping around when `cycle` is set);
//   3. the first matching rule;
//   4. `fallback`.
// Replies may contain macros: {{digest}} (hash of the request),
// {{pick:a|b|c}} (digest-selected alternative), {{last}} (content of the last
// message) and {{call}} (1-based call number).
struct ScriptRule {
  std::optional<std::string> contains;  // substring of any message
  std::optional<std::size_t> min_messages;  // non-system message count
  std::optional<std::size_t> max_messages;
  std::string reply;
};

struct Script {
  std::vector<std::string> replies;
  bool cycle = false;
  std::vector<ScriptRule> rules;
  std::optional<std::string> fallback;
  int fail_first = 0;
  std::string failure = "transient";  // transient | auth | malformed
  double latency_ms = 250;
};

struct ProviderConfig {
  ProviderKind kind = ProviderKind::kScripted;
  std::string endpoint;
  std::string auth;  // "env:VARIABLE" or empty
  std::string model_name = "scripted";
  RetryPolicy retry;
  double rate_limit_rpm = 600000;
  int timeout_ms = 120000;
  Script script;

  /// Throws ConfigError on broken invariants (max_attempts < 1, rate <= 0,
  /// inline secret, missing endpoint for HTTP kinds).
  void check() const;
};

ProviderConfig provider_from_json(const Json& j);

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& message)
      : Error("transport_error", message) {}
};

class AuthError : public Error {
 public:
  explicit AuthError(const std::string& message) : Error("auth_error", message) {}
};

class MalformedResponse : public Error {
 public:
  MalformedResponse(const std::string& message, std::string raw_body)
      : Error("malformed_response", message), raw_body_(std::move(raw_body)) {}
  const std::string& raw_body() const { return raw_body_; }

 private:
  std::string raw_body_;
};

/// Retryable failure (HTTP 408/429/5xx, connection errors, timeouts).
class TransientFailure : public Error {
 public:
  explicit TransientFailure(const std::string& message)
      : Error("transient_failure", message) {}
};

/// ceil(code points / 4). A deliberate approximation used when a provider
/// omits usage figures.
std::int64_t estimate_tokens(std::string_view text);

struct UsageEntry {
  std::string tag;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double latency_ms = 0;
  int attempts = 0;
  bool ok = false;
};

struct UsageTotals {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::size_t calls = 0;
};

// Thread-safe record of every complete() call.
class UsageLedger {
 public:
  void record(UsageEntry entry);
  std::vector<UsageEntry> entries() const;
  UsageTotals totals() const;
  std::size_t count_tag(std::string_view tag) const;
  /// `{"tag","input_tokens","output_tokens","latency_ms","attempts"}` per line.
  std::string to_jsonl() const;

 private:
  mutable std::mutex mu_;
  std::vector<UsageEntry> entries_;
};

struct RawReply {
  std::string content;
  std::optional<std::int64_t> input_tokens;
  std::optional<std::int64_t> output_tokens;
  std::optional<double> latency_ms;  // set by simulated transports
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual RawReply send(const ChatRequest& request) = 0;
};

std::unique_ptr<Transport> make_transport(const ProviderConfig& config);

/// Client-side token bucket; capacity one second's worth of requests.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  std::mutex mu_;
  double rate_per_s_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
};

/// Gateway to one provider. Safe for concurrent use.
class LlmClient {
 public:
  explicit LlmClient(ProviderConfig config,
                     std::shared_ptr<UsageLedger> ledger = nullptr);
  LlmClient(ProviderConfig config, std::unique_ptr<Transport> transport,
            std::shared_ptr<UsageLedger> ledger = nullptr);

  /// Sends `request`, retrying transient failures with exponential backoff.
  /// Throws TransportError after max_attempts, AuthError immediately,
  /// MalformedResponse for unparseable bodies.
  ChatResponse complete(const ChatRequest& request);

  const ProviderConfig& config() const { return config_; }
  UsageLedger& ledger() { return *ledger_; }
  std::shared_ptr<UsageLedger> shared_ledger() const { return ledger_; }

  /// When enabled, every request passed to complete() is kept for audits.
  void set_recording(bool on);
  std::vector<ChatRequest> recorded() const;

 private:
  ProviderConfig config_;
  std::unique_ptr<Transport> transport_;
  std::shared_ptr<UsageLedger> ledger_;
  RateLimiter limiter_;
  mutable std::mutex record_mu_;
  bool recording_ = false;
  std::vector<ChatRequest> recorded_;
};

/// Concatenated contents, used by audits that grep every prompt.
std::string flatten(const ChatRequest& request);

}  // namespace flowc
