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

#include "flowc/runtime.hpp"

#include <stdexcept>

namespace flowc {

double ConversationTimer::seconds() const {
  if (simulated_) return simulated_ms_ / 1000.0;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

std::vector<ChatMessage> agent_view(const std::vector<Turn>& history) {
  std::vector<ChatMessage> out;
  out.reserve(history.size());
  for (const auto& t : history) {
    out.push_back({t.role == Speaker::kAgent ? ChatRole::kAssistant : ChatRole::kUser,
                   strip_end_marker(t.content)});
  }
  return out;
}

ChatRequest user_sim_request(const std::vector<Turn>& history, const ScenarioSpec& scenario,
                             const UserSimConfig& cfg) {
  std::string system =
      "You are role-playing a customer who is chatting with a service agent. "
      "Stay in character and reply with the customer's next message only, in plain "
      "conversational language.\n\nPersona:\n";
  system += render_template(cfg.persona_template, scenario);
  system += "\n\nYour situation:\n";
  for (const auto& [name, value] : scenario.bindings) {
    system += "- " + name + ": " + to_text(value) + "\n";
  }

  ChatRequest req;
  req.messages.push_back({ChatRole::kSystem, system});
  req.messages.push_back({ChatRole::kUser, "Conversation so far:\n" +
                                               render_transcript(history, "Agent", "You") +
                                               "\nWrite your next message."});
  req.temperature = cfg.temperature;
  req.max_output_tokens = cfg.max_user_tokens;
  req.tag = "user_sim";
  return req;
}

Turn user_turn(const std::vector<Turn>& history, const ScenarioSpec& scenario,
               const UserSimConfig& cfg, LlmClient& llm) {
  if (history.empty() || history.back().role != Speaker::kAgent) {
    throw std::logic_error("user_turn requires the last turn to be an agent turn");
  }
  const auto resp = llm.complete(user_sim_request(history, scenario, cfg));
  Turn t;
  t.role = Speaker::kUser;
  t.content = resp.content;
  t.input_tokens = resp.input_tokens;
  t.output_tokens = resp.output_tokens;
  t.latency_ms = resp.latency_ms;
  return t;
}

std::string in_context_system_prompt(const ProcedureGraph& graph, std::string_view end_marker) {
  std::string s =
      "You are a customer service agent. The procedure below defines how this conversation "
      "should go: each node is one turn, each edge is an allowed transition, and edge "
      "conditions say when a branch applies. Track where you are in the procedure yourself, "
      "speak only as the agent, and ask for what the next step needs. When the conversation "
      "reaches a terminal node, finish your final message with ";
  s += end_marker;
  s += ".\n\n";
  s += serialize_for_prompt(graph);
  return s;
}

namespace {

Conversation run_self_orchestrated(Condition condition, const std::string& system_prompt,
                                   const ScenarioSpec& scenario, LlmClient& agent_llm,
                                   LlmClient& user_llm, const UserSimConfig& user_sim,
                                   const RunOptions& opts) {
  Conversation conv;
  conv.condition = condition;
  conv.scenario_id = scenario.scenario_id;
  conv.seed = scenario.seed;
  ConversationTimer timer(opts.simulated_timing);

  for (;;) {
    if (static_cast<int>(conv.turns.size()) >= opts.turn_cap) {
      conv.terminal = Outcome::kTurnCap;
      break;
    }
    ChatRequest req;
    req.messages.push_back({ChatRole::kSystem, system_prompt});
    for (auto& m : agent_view(conv.turns)) req.messages.push_back(std::move(m));
    req.temperature = opts.agent_temperature;
    req.max_output_tokens = opts.max_output_tokens;
    req.tag = "agent";
    ChatResponse resp;
    try {
      resp = agent_llm.complete(req);
    } catch (const AuthError&) {
      throw;
    } catch (const Error&) {
      conv.terminal = Outcome::kFailed;
      break;
    }
    timer.add_latency(resp.latency_ms);
    conv.turns.push_back({Speaker::kAgent, resp.content, std::nullopt, resp.input_tokens,
                          resp.output_tokens, resp.latency_ms});
    if (end_detection(resp.content, opts.end_marker)) {
      conv.terminal = Outcome::kSuccess;
      break;
    }
    if (static_cast<int>(conv.turns.size()) >= opts.turn_cap) {
      conv.terminal = Outcome::kTurnCap;
      break;
    }
    try {
      auto t = user_turn(conv.turns, scenario, user_sim, user_llm);
      timer.add_latency(t.latency_ms);
      conv.turns.push_back(std::move(t));
    } catch (const AuthError&) {
      throw;
    } catch (const Error&) {
      conv.terminal = Outcome::kFailed;
      break;
    }
  }
  conv.wall_clock_s = timer.seconds();
  return conv;
}

}  // namespace

Conversation run_in_context(const ProcedureGraph& graph, const ScenarioSpec& scenario,
                            LlmClient& agent_llm, LlmClient& user_llm,
                            const UserSimConfig& user_sim, const RunOptions& opts) {
  return run_self_orchestrated(Condition::kInContext,
                               in_context_system_prompt(graph, opts.end_marker), scenario,
                               agent_llm, user_llm, user_sim, opts);
}

Conversation run_compiled(LlmClient& endpoint, const ScenarioSpec& scenario, LlmClient& user_llm,
                          const UserSimConfig& user_sim, const std::string& minimal_system_prompt,
                          const RunOptions& opts) {
  return run_self_orchestrated(Condition::kSubterranean, minimal_system_prompt, scenario,
                               endpoint, user_llm, user_sim, opts);
}

}  // namespace flowc
