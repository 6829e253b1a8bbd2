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

#include "flowc/llmgate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

namespace flowc {

std::string_view to_string(ChatRole role) {
  switch (role) {
    case ChatRole::kSystem: return "system";
    case ChatRole::kUser: return "user";
    case ChatRole::kAssistant: return "assistant";
  }
  return "user";
}

void ChatRequest::check() const {
  if (messages.empty()) throw std::invalid_argument("chat request has no messages");
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (messages[i].content.empty())
      throw std::invalid_argument("chat message " + std::to_string(i) + " is empty");
    if (i > 0 && messages[i].role == ChatRole::kSystem)
      throw std::invalid_argument("only the first message may be a system message");
  }
  if (temperature < 0) throw std::invalid_argument("temperature must be >= 0");
  if (max_output_tokens < 1) throw std::invalid_argument("max_output_tokens must be >= 1");
}

void ProviderConfig::check() const {
  if (retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
  if (retry.base_backoff_ms < 0) throw ConfigError("retry.base_backoff_ms must be >= 0");
  if (!(rate_limit_rpm > 0)) throw ConfigError("rate_limit must be > 0");
  if (!auth.empty() && auth.rfind("env:", 0) != 0)
    throw ConfigError("auth must be an environment reference of the form env:NAME");
  if (kind != ProviderKind::kScripted && endpoint.empty())
    throw ConfigError("HTTP providers need an endpoint");
}

ProviderConfig provider_from_json(const Json& j) {
  ProviderConfig c;
  const auto kind = j.value("kind", std::string("scripted"));
  if (kind == "openai-compatible-http") {
    c.kind = ProviderKind::kOpenAiHttp;
  } else if (kind == "anthropic-style-http") {
    c.kind = ProviderKind::kAnthropicHttp;
  } else if (kind == "scripted") {
    c.kind = ProviderKind::kScripted;
  } else {
    throw ConfigError("unknown provider kind '" + kind + "'");
  }
  c.endpoint = j.value("endpoint", std::string());
  c.auth = j.value("auth", std::string());
  c.model_name = j.value("model_name", std::string(kind == "scripted" ? "scripted" : ""));
  if (j.contains("retry")) {
    c.retry.max_attempts = j["retry"].value("max_attempts", c.retry.max_attempts);
    c.retry.base_backoff_ms = j["retry"].value("base_backoff_ms", c.retry.base_backoff_ms);
  }
  c.rate_limit_rpm = j.value("rate_limit", c.rate_limit_rpm);
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  if (j.contains("script")) {
    const auto& s = j["script"];
    c.script.replies = s.value("replies", std::vector<std::string>{});
    c.script.cycle = s.value("cycle", false);
    c.script.fail_first = s.value("fail_first", 0);
    c.script.failure = s.value("failure", std::string("transient"));
    c.script.latency_ms = s.value("latency_ms", c.script.latency_ms);
    if (s.contains("fallback")) c.script.fallback = s["fallback"].get<std::string>();
    for (const auto& r : s.value("rules", Json::array())) {
      ScriptRule rule;
      if (r.contains("contains")) rule.contains = r["contains"].get<std::string>();
      if (r.contains("min_messages")) rule.min_messages = r["min_messages"].get<std::size_t>();
      if (r.contains("max_messages")) rule.max_messages = r["max_messages"].get<std::size_t>();
      rule.reply = r.at("reply").get<std::string>();
      c.script.rules.push_back(std::move(rule));
    }
  }
  c.check();
  return c;
}

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((utf8_length(text) + 3) / 4);
}

void UsageLedger::record(UsageEntry entry) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(entry));
}

std::vector<UsageEntry> UsageLedger::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

UsageTotals UsageLedger::totals() const {
  std::lock_guard lock(mu_);
  UsageTotals t;
  for (const auto& e : entries_) {
    if (!e.ok) continue;
    t.input_tokens += e.input_tokens;
    t.output_tokens += e.output_tokens;
    ++t.calls;
  }
  return t;
}

std::size_t UsageLedger::count_tag(std::string_view tag) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count_if(
      entries_.begin(), entries_.end(), [&](const UsageEntry& e) { return e.tag == tag; }));
}

std::string UsageLedger::to_jsonl() const {
  std::vector<Json> lines;
  for (const auto& e : entries()) {
    Json j;
    j["tag"] = e.tag;
    j["input_tokens"] = e.input_tokens;
    j["output_tokens"] = e.output_tokens;
    j["latency_ms"] = e.latency_ms;
    j["attempts"] = e.attempts;
    lines.push_back(std::move(j));
  }
  return flowc::to_jsonl(lines);
}

std::string flatten(const ChatRequest& request) {
  std::string out;
  for (const auto& m : request.messages) {
    out += m.content;
    out += '\n';
  }
  return out;
}

namespace {

class ScriptedTransport : public Transport {
 public:
  explicit ScriptedTransport(Script script) : script_(std::move(script)) {}

  RawReply send(const ChatRequest& request) override {
    std::size_t call;
    std::optional<std::string> queued;
    {
      std::lock_guard lock(mu_);
      call = ++calls_;
      if (static_cast<int>(call) <= script_.fail_first) fail(call);
      if (!script_.replies.empty()) {
        if (next_reply_ < script_.replies.size()) {
          queued = script_.replies[next_reply_++];
        } else if (script_.cycle) {
          queued = script_.replies[next_reply_++ % script_.replies.size()];
        }
      }
    }
    std::string text;
    if (queued) {
      text = *queued;
    } else if (const auto* rule = match(request)) {
      text = rule->reply;
    } else if (script_.fallback) {
      text = *script_.fallback;
    } else {
      throw MalformedResponse("scripted provider has no reply for call " +
                                  std::to_string(call),
                              "");
    }
    RawReply reply;
    reply.content = expand(text, request, call);
    reply.latency_ms = script_.latency_ms;
    return reply;
  }

 private:
  [[noreturn]] void fail(std::size_t call) const {
    const std::string what = "scripted failure on call " + std::to_string(call);
    if (script_.failure == "auth") throw AuthError(what);
    if (script_.failure == "malformed") throw MalformedResponse(what, "<scripted>");
    throw TransientFailure(what);
  }

  const ScriptRule* match(const ChatRequest& request) const {
    std::size_t non_system = 0;
    for (const auto& m : request.messages)
      if (m.role != ChatRole::kSystem) ++non_system;
    for (const auto& rule : script_.rules) {
      if (rule.min_messages && non_system < *rule.min_messages) continue;
      if (rule.max_messages && non_system > *rule.max_messages) continue;
      if (rule.contains) {
        const bool found = std::any_of(
            request.messages.begin(), request.messages.end(),
            [&](const ChatMessage& m) { return m.content.find(*rule.contains) != std::string::npos; });
        if (!found) continue;
      }
      return &rule;
    }
    return nullptr;
  }

  static std::uint64_t digest_of(const ChatRequest& request) {
    std::uint64_t h = fnv1a64("");
    for (const auto& m : request.messages) {
      h = fnv1a64(to_string(m.role), h);
      h = fnv1a64("\x1f", h);
      h = fnv1a64(m.content, h);
      h = fnv1a64("\x1e", h);
    }
    if (request.seed) h = fnv1a64(std::to_string(*request.seed), h);
    return h;
  }

  static std::string expand(const std::string& text, const ChatRequest& request,
                            std::size_t call) {
    const std::uint64_t digest = digest_of(request);
    std::string out;
    std::size_t i = 0;
    std::uint64_t picks = 0;
    while (i < text.size()) {
      const auto open = text.find("{{", i);
      if (open == std::string::npos) {
        out.append(text, i, std::string::npos);
        break;
      }
      const auto close = text.find("}}", open + 2);
      if (close == std::string::npos) {
        out.append(text, i, std::string::npos);
        break;
      }
      out.append(text, i, open - i);
      const std::string macro = text.substr(open + 2, close - open - 2);
      if (macro == "digest") {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
        out += buf;
      } else if (macro == "call") {
        out += std::to_string(call);
      } else if (macro == "last") {
        out += request.messages.back().content;
      } else if (macro.rfind("pick:", 0) == 0) {
        std::vector<std::string> options;
        std::string rest = macro.substr(5);
        std::size_t p = 0;
        for (;;) {
          const auto bar = rest.find('|', p);
          options.push_back(rest.substr(p, bar == std::string::npos ? std::string::npos : bar - p));
          if (bar == std::string::npos) break;
          p = bar + 1;
        }
        const auto h = fnv1a64(std::to_string(picks++), digest);
        out += options[h % options.size()];
      } else {
        out.append(text, open, close + 2 - open);
      }
      i = close + 2;
    }
    return out;
  }

  Script script_;
  std::mutex mu_;
  std::size_t calls_ = 0;
  std::size_t next_reply_ = 0;
};

}  // namespace

// Defined in http_transport.cpp (keeps the HTTP library in one TU).
std::unique_ptr<Transport> make_http_transport(const ProviderConfig& config);

std::unique_ptr<Transport> make_transport(const ProviderConfig& config) {
  if (config.kind == ProviderKind::kScripted)
    return std::make_unique<ScriptedTransport>(config.script);
  return make_http_transport(config);
}

RateLimiter::RateLimiter(double requests_per_minute)
    : rate_per_s_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, requests_per_minute / 60.0)),
      tokens_(capacity_),
      last_(Clock::now()) {}

void RateLimiter::acquire() {
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mu_);
      const auto now = Clock::now();
      const std::chrono::duration<double> elapsed = now - last_;
      last_ = now;
      tokens_ = std::min(capacity_, tokens_ + elapsed.count() * rate_per_s_);
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_s_);
    }
    std::this_thread::sleep_for(wait);
  }
}

LlmClient::LlmClient(ProviderConfig config, std::shared_ptr<UsageLedger> ledger)
    : LlmClient(config, make_transport(config), std::move(ledger)) {}

LlmClient::LlmClient(ProviderConfig config, std::unique_ptr<Transport> transport,
                     std::shared_ptr<UsageLedger> ledger)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      ledger_(ledger ? std::move(ledger) : std::make_shared<UsageLedger>()),
      limiter_(config_.rate_limit_rpm) {
  config_.check();
}

void LlmClient::set_recording(bool on) {
  std::lock_guard lock(record_mu_);
  recording_ = on;
}

std::vector<ChatRequest> LlmClient::recorded() const {
  std::lock_guard lock(record_mu_);
  return recorded_;
}

ChatResponse LlmClient::complete(const ChatRequest& request) {
  request.check();
  {
    std::lock_guard lock(record_mu_);
    if (recording_) recorded_.push_back(request);
  }

  const int max_attempts = config_.retry.max_attempts;
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    limiter_.acquire();
    const auto t0 = std::chrono::steady_clock::now();
    try {
      RawReply raw = transport_->send(request);
      const double measured =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      ChatResponse resp;
      resp.content = std::move(raw.content);
      resp.latency_ms = raw.latency_ms.value_or(measured);
      resp.provider = config_.model_name;
      resp.attempts = attempt;
      if (raw.input_tokens && raw.output_tokens) {
        resp.input_tokens = *raw.input_tokens;
        resp.output_tokens = *raw.output_tokens;
      } else {
        std::int64_t in = 0;
        for (const auto& m : request.messages) in += estimate_tokens(m.content);
        resp.input_tokens = raw.input_tokens.value_or(in);
        resp.output_tokens = raw.output_tokens.value_or(estimate_tokens(resp.content));
        resp.tokens_estimated = true;
      }
      ledger_->record({request.tag, resp.input_tokens, resp.output_tokens, resp.latency_ms,
                       attempt, true});
      return resp;
    } catch (const TransientFailure& e) {
      last_error = e.what();
      if (attempt < max_attempts && config_.retry.base_backoff_ms > 0) {
        const double backoff = config_.retry.base_backoff_ms * std::pow(2.0, attempt - 1);
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(backoff));
      }
    } catch (const Error&) {
      ledger_->record({request.tag, 0, 0, 0, attempt, false});
      throw;
    }
  }
  ledger_->record({request.tag, 0, 0, 0, max_attempts, false});
  throw TransportError("giving up after " + std::to_string(max_attempts) +
                       " attempts: " + last_error);
}

}  // namespace flowc
