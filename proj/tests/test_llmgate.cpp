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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "flowc/llmgate.hpp"
#include "support.hpp"

using namespace flowc;

namespace {

ChatRequest simple_request(std::string text = "hi", std::string tag = "test") {
  ChatRequest r;
  r.messages = {{ChatRole::kSystem, "Be brief."}, {ChatRole::kUser, std::move(text)}};
  r.tag = std::move(tag);
  return r;
}

// Local stand-in for both HTTP dialects. Records the last request body and
// headers; the status and body for the next reply are set by the test.
struct FakeServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::mutex mu;
  Json last_body;
  httplib::Headers last_headers;
  std::vector<int> statuses;  // consumed front to back; 200 when empty
  std::string override_body;
  int hits = 0;

  FakeServer() {
    auto handler = [this](bool anthropic) {
      return [this, anthropic](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(mu);
        ++hits;
        last_body = Json::parse(req.body);
        last_headers = req.headers;
        int status = 200;
        if (!statuses.empty()) {
          status = statuses.front();
          statuses.erase(statuses.begin());
        }
        res.status = status;
        if (!override_body.empty()) {
          res.set_content(override_body, "application/json");
        } else if (anthropic) {
          res.set_content(R"({"content":[{"type":"text","text":"from messages api"}],)"
                          R"("usage":{"input_tokens":21,"output_tokens":4}})",
                          "application/json");
        } else {
          res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"from chat api"}}],)"
                          R"("usage":{"prompt_tokens":17,"completion_tokens":3}})",
                          "application/json");
        }
      };
    };
    server.Post("/v1/chat/completions", handler(false));
    server.Post("/v1/messages", handler(true));
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeServer() {
    server.stop();
    thread.join();
  }
  std::string header(const std::string& key) {
    std::lock_guard lock(mu);
    auto it = last_headers.find(key);
    return it == last_headers.end() ? std::string() : it->second;
  }
};

ProviderConfig http_config(ProviderKind kind, int port, const std::string& path) {
  ProviderConfig c;
  c.kind = kind;
  c.endpoint = "http://127.0.0.1:" + std::to_string(port) + path;
  c.model_name = "test-model";
  c.auth = "env:FLOWC_TEST_KEY";
  c.retry.base_backoff_ms = 0;
  c.timeout_ms = 5000;
  return c;
}

}  // namespace

TEST_CASE("scripted queued reply") {
  LlmClient llm(testing::scripted({"hello"}));
  const auto r = llm.complete(simple_request());
  CHECK(r.content == "hello");
  CHECK(r.latency_ms >= 0);
  CHECK(r.attempts == 1);
  CHECK(r.tokens_estimated);
  CHECK(llm.ledger().totals().calls == 1);
  // Queue exhausted and no fallback.
  CHECK_THROWS_AS(llm.complete(simple_request()), MalformedResponse);
}

TEST_CASE("retry contract") {
  SUBCASE("two failures then success") {
    auto cfg = testing::scripted({"ok"});
    cfg.script.fail_first = 2;
    LlmClient llm(cfg);
    const auto r = llm.complete(simple_request());
    CHECK(r.content == "ok");
    CHECK(r.attempts == 3);
    const auto entries = llm.ledger().entries();
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].attempts == 3);
    CHECK(entries[0].ok);
  }
  SUBCASE("three failures exhaust three attempts") {
    auto cfg = testing::scripted({"ok"});
    cfg.script.fail_first = 3;
    LlmClient llm(cfg);
    CHECK_THROWS_AS(llm.complete(simple_request()), TransportError);
    const auto entries = llm.ledger().entries();
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].attempts == 3);
    CHECK_FALSE(entries[0].ok);
  }
  SUBCASE("auth failures are not retried") {
    auto cfg = testing::scripted({"ok"});
    cfg.script.fail_first = 1;
    cfg.script.failure = "auth";
    LlmClient llm(cfg);
    CHECK_THROWS_AS(llm.complete(simple_request()), AuthError);
    CHECK(llm.ledger().entries().at(0).attempts == 1);
  }
}

TEST_CASE("token estimate") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("abcdefgh") == 2);
  CHECK(estimate_tokens("abcdefghi") == 3);
  const std::string s1 = "short", s2 = "a somewhat longer string of text";
  CHECK(estimate_tokens(s1 + s2) >= std::max(estimate_tokens(s1), estimate_tokens(s2)));
}

TEST_CASE("script rules and macros") {
  ProviderConfig cfg = testing::scripted_fallback("fallback {{pick:a|b|c}}", 40);
  cfg.script.rules.push_back({std::string("weather"), std::nullopt, std::nullopt, "sunny"});
  cfg.script.rules.push_back({std::nullopt, std::size_t{3}, std::nullopt, "long {{last}}"});
  LlmClient llm(cfg);
  CHECK(llm.complete(simple_request("what is the weather")).content == "sunny");

  const auto a = llm.complete(simple_request("x")).content;
  CHECK(a.rfind("fallback ", 0) == 0);
  CHECK(llm.complete(simple_request("x")).content == a);  // same request, same pick

  auto req = simple_request("first");
  req.messages.push_back({ChatRole::kAssistant, "second"});
  req.messages.push_back({ChatRole::kUser, "third"});
  const auto r = llm.complete(req);
  CHECK(r.content == "long third");
  CHECK(r.latency_ms == 40);

  ProviderConfig dcfg = testing::scripted_fallback("{{digest}}");
  LlmClient d(dcfg);
  auto s1 = simple_request();
  s1.seed = 1;
  auto s2 = simple_request();
  s2.seed = 2;
  CHECK(d.complete(s1).content != d.complete(s2).content);
  CHECK(d.complete(s1).content == d.complete(s1).content);
}

TEST_CASE("requests are validated") {
  LlmClient llm(testing::scripted({"x"}, true));
  ChatRequest empty;
  CHECK_THROWS_AS(llm.complete(empty), std::invalid_argument);
  auto bad = simple_request();
  bad.messages.push_back({ChatRole::kSystem, "late system"});
  CHECK_THROWS_AS(llm.complete(bad), std::invalid_argument);
  auto hot = simple_request();
  hot.temperature = -1;
  CHECK_THROWS_AS(llm.complete(hot), std::invalid_argument);
}

TEST_CASE("provider config parsing") {
  const auto c = provider_from_json(Json::parse(
      R"({"kind":"openai-compatible-http","endpoint":"http://localhost:1/v1/chat/completions",)"
      R"("auth":"env:X","model_name":"m","retry":{"max_attempts":5,"base_backoff_ms":10},)"
      R"("rate_limit":60,"timeout_ms":1000})"));
  CHECK(c.kind == ProviderKind::kOpenAiHttp);
  CHECK(c.retry.max_attempts == 5);
  CHECK(c.rate_limit_rpm == 60);
  CHECK_THROWS_AS(provider_from_json(Json::parse(R"({"kind":"carrier-pigeon"})")), ConfigError);
  CHECK_THROWS_AS(provider_from_json(Json::parse(R"({"kind":"anthropic-style-http"})")),
                  ConfigError);
  CHECK_THROWS_AS(provider_from_json(Json::parse(R"({"kind":"scripted","auth":"plaintext"})")),
                  ConfigError);
}

TEST_CASE("recording and ledger export") {
  LlmClient llm(testing::scripted({"a", "b"}));
  llm.set_recording(true);
  (void)llm.complete(simple_request("one", "agent"));
  (void)llm.complete(simple_request("two", "route"));
  const auto rec = llm.recorded();
  REQUIRE(rec.size() == 2);
  CHECK(rec[1].messages[1].content == "two");
  CHECK(llm.ledger().count_tag("route") == 1);
  const auto lines = llm.ledger().to_jsonl();
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 2);
  CHECK(flatten(rec[0]).find("one") != std::string::npos);
}

TEST_CASE("openai-compatible dialect against a local server") {
  setenv("FLOWC_TEST_KEY", "secret-123", 1);
  FakeServer srv;
  LlmClient llm(http_config(ProviderKind::kOpenAiHttp, srv.port, "/v1/chat/completions"));
  auto req = simple_request("ping");
  req.seed = 9;
  req.max_output_tokens = 77;
  const auto r = llm.complete(req);
  CHECK(r.content == "from chat api");
  CHECK(r.input_tokens == 17);
  CHECK(r.output_tokens == 3);
  CHECK_FALSE(r.tokens_estimated);
  CHECK(srv.header("Authorization") == "Bearer secret-123");
  CHECK(srv.last_body["model"] == "test-model");
  CHECK(srv.last_body["max_tokens"] == 77);
  CHECK(srv.last_body["seed"] == 9);
  REQUIRE(srv.last_body["messages"].size() == 2);
  CHECK(srv.last_body["messages"][0]["role"] == "system");

  SUBCASE("transient statuses are retried") {
    srv.statuses = {503, 429};
    const auto again = llm.complete(req);
    CHECK(again.attempts == 3);
  }
  SUBCASE("auth statuses are not") {
    srv.statuses = {401};
    CHECK_THROWS_AS(llm.complete(req), AuthError);
  }
  SUBCASE("client errors are transport errors") {
    srv.statuses = {400};
    CHECK_THROWS_AS(llm.complete(req), TransportError);
  }
  SUBCASE("unparseable bodies") {
    srv.override_body = R"({"nope":true})";
    try {
      (void)llm.complete(req);
      FAIL("expected MalformedResponse");
    } catch (const MalformedResponse& e) {
      CHECK(e.raw_body() == R"({"nope":true})");
    }
  }
}

TEST_CASE("anthropic-style dialect against a local server") {
  setenv("FLOWC_TEST_KEY", "secret-456", 1);
  FakeServer srv;
  LlmClient llm(http_config(ProviderKind::kAnthropicHttp, srv.port, "/v1/messages"));
  const auto r = llm.complete(simple_request("ping"));
  CHECK(r.content == "from messages api");
  CHECK(r.input_tokens == 21);
  CHECK(r.output_tokens == 4);
  CHECK(srv.header("x-api-key") == "secret-456");
  CHECK(srv.header("anthropic-version") == "2023-06-01");
  CHECK(srv.last_body["system"] == "Be brief.");
  REQUIRE(srv.last_body["messages"].size() == 1);
  CHECK(srv.last_body["messages"][0]["role"] == "user");

  // A conversation that opens with the assistant gets a placeholder user turn.
  ChatRequest agent_first;
  agent_first.messages = {{ChatRole::kSystem, "sys"}, {ChatRole::kAssistant, "Welcome!"}};
  (void)llm.complete(agent_first);
  CHECK(srv.last_body["messages"][0]["role"] == "user");
  CHECK(srv.last_body["messages"][1]["content"] == "Welcome!");
}

TEST_CASE("missing credentials") {
  unsetenv("FLOWC_TEST_KEY_UNSET");
  auto cfg = http_config(ProviderKind::kOpenAiHttp, 1, "/v1/chat/completions");
  cfg.auth = "env:FLOWC_TEST_KEY_UNSET";
  LlmClient llm(cfg);
  CHECK_THROWS_AS(llm.complete(simple_request()), AuthError);
}

TEST_CASE("unreachable endpoint gives up after the retry budget") {
  auto cfg = http_config(ProviderKind::kOpenAiHttp, 1, "/v1/chat/completions");
  cfg.auth.clear();
  cfg.retry.max_attempts = 2;
  LlmClient llm(cfg);
  CHECK_THROWS_AS(llm.complete(simple_request()), TransportError);
}
