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
#include <string>
#include <vector>

#include "flowc/conversation.hpp"
#include "flowc/flowgraph.hpp"
#include "flowc/llmgate.hpp"
#include "flowc/scenario.hpp"

namespace flowc {

inline constexpr int kDefaultTurnCap = 60;

struct RunOptions {
  int turn_cap = kDefaultTurnCap;
  std::string end_marker{kEndMarker};
  // Wall clock = sum of provider-reported latencies instead of a monotonic
  // clock. Used with scripted providers so that artifacts are byte-stable.
  bool simulated_timing = false;
  double agent_temperature = 0.7;
  int max_output_tokens = 512;
  int router_attempts = 2;
};

struct UserSimConfig {
  std::string persona_template;
  int max_user_tokens = 256;
  double temperature = 0.7;
};

/// Measures a conversation's wall clock, either with steady_clock or by
/// summing simulated latencies.
class ConversationTimer {
 public:
  explicit ConversationTimer(bool simulated)
      : simulated_(simulated), start_(std::chrono::steady_clock::now()) {}
  void add_latency(double ms) { simulated_ms_ += ms; }
  double seconds() const;

 private:
  bool simulated_;
  std::chrono::steady_clock::time_point start_;
  double simulated_ms_ = 0;
};

/// Chat history from the agent's point of view (agent -> assistant).
std::vector<ChatMessage> agent_view(const std::vector<Turn>& history);

/// Prompt sent to the user simulator: persona, scenario bindings and the
/// transcript. Never contains graph content.
ChatRequest user_sim_request(const std::vector<Turn>& history, const ScenarioSpec& scenario,
                             const UserSimConfig& cfg);

/// One simulated user message. Requires a nonempty history ending with an
/// agent turn.
Turn user_turn(const std::vector<Turn>& history, const ScenarioSpec& scenario,
               const UserSimConfig& cfg, LlmClient& llm);

/// System prompt of the in-context condition: role preamble plus
/// serialize_for_prompt(graph).
std::string in_context_system_prompt(const ProcedureGraph& graph,
                                     std::string_view end_marker = kEndMarker);

/// In-context self-orchestration: one agent call per agent turn with the
/// whole serialized graph in the system prompt.
Conversation run_in_context(const ProcedureGraph& graph, const ScenarioSpec& scenario,
                            LlmClient& agent_llm, LlmClient& user_llm,
                            const UserSimConfig& user_sim, const RunOptions& opts = {});

/// Compiled endpoint: the system prompt is exactly `minimal_system_prompt`.
Conversation run_compiled(LlmClient& endpoint, const ScenarioSpec& scenario, LlmClient& user_llm,
                          const UserSimConfig& user_sim, const std::string& minimal_system_prompt,
                          const RunOptions& opts = {});

}  // namespace flowc
