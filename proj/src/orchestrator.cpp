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

#include "flowc/orchestrator.hpp"

#include <cctype>
#include <charconv>
#include <stdexcept>

namespace flowc {
namespace {

std::string transcript_or_opening(const std::vector<Turn>& history) {
  if (history.empty()) return "(The customer has just connected. Nothing has been said yet.)";
  return "Conversation so far:\n" + render_transcript(history);
}

}  // namespace

ChatRequest agent_turn_request(const OrchestratorSession& session, const RunOptions& opts) {
  const auto& node = session.graph->node(session.current_node);
  const std::string instruction = render_template(node.prompt_template, session.scenario);

  std::string system =
      "You are a customer service agent in a live chat. Write only your next message to the "
      "customer, in plain conversational language.\n\nInstruction for this message:\n";
  system += instruction;
  if (node.is_terminal()) system += "\n\nThis is the final message of the conversation.";

  ChatRequest req;
  req.messages.push_back({ChatRole::kSystem, std::move(system)});
  req.messages.push_back(
      {ChatRole::kUser, transcript_or_opening(session.history) + "\nWrite the agent's next message."});
  req.temperature = opts.agent_temperature;
  req.max_output_tokens = opts.max_output_tokens;
  req.tag = "agent";
  return req;
}

std::string agent_turn(OrchestratorSession& session, LlmClient& llm, const RunOptions& opts) {
  const auto& node = session.graph->node(session.current_node);
  if (node.role != Role::kAgent) {
    throw std::logic_error("agent_turn called at user node '" + node.id + "'");
  }
  auto req = agent_turn_request(session, opts);  // may throw TemplateError
  const auto resp = llm.complete(req);
  session.latency_ms += resp.latency_ms;
  std::string content = resp.content;
  if (node.is_terminal() && !end_detection(content, opts.end_marker)) {
    content += " ";
    content += opts.end_marker;
  }
  session.history.push_back({Speaker::kAgent, content, node.id, resp.input_tokens,
                             resp.output_tokens, resp.latency_ms});
  session.visited.push_back(node.id);
  return content;
}

ChatRequest routing_request(const OrchestratorSession& session,
                            const std::vector<std::pair<int, std::string>>& candidates) {
  std::string system =
      "You are a routing classifier for a customer service conversation. Read the "
      "conversation and decide which option best describes what should happen next.\n\n"
      "Options:\n";
  for (const auto& [n, label] : candidates) system += std::to_string(n) + ". " + label + "\n";
  system += "\nAnswer with the number alone.";

  ChatRequest req;
  req.messages.push_back({ChatRole::kSystem, std::move(system)});
  req.messages.push_back({ChatRole::kUser, transcript_or_opening(session.history)});
  req.temperature = 0.0;
  req.max_output_tokens = 8;
  req.tag = "route";
  return req;
}

std::optional<int> parse_option(std::string_view reply, int option_count) {
  std::size_t i = 0;
  while (i < reply.size()) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
    // Digits glued to letters ("v2", "2nd") are not standalone tokens.
    const bool left_ok = i == 0 || !std::isalpha(static_cast<unsigned char>(reply[i - 1]));
    const bool right_ok = j == reply.size() || !std::isalpha(static_cast<unsigned char>(reply[j]));
    if (left_ok && right_ok) {
      int value = 0;
      const auto [ptr, ec] = std::from_chars(reply.data() + i, reply.data() + j, value);
      if (ec == std::errc() && value >= 1 && value <= option_count) return value;
    }
    i = j;
  }
  return std::nullopt;
}

NodeId route(OrchestratorSession& session, LlmClient& router, const RunOptions& opts) {
  const auto& graph = *session.graph;
  const auto& out = graph.outgoing(session.current_node);
  if (out.empty()) {
    throw std::logic_error("route called at node '" + session.current_node +
                           "' without outgoing edges");
  }
  if (out.size() == 1) return graph.edges()[out.front()].to;

  RoutingRecord record;
  record.hub = session.current_node;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& e = graph.edges()[out[k]];
    record.candidates.emplace_back(static_cast<int>(k + 1), e.condition.value_or("otherwise"));
  }
  const auto req = routing_request(session, record.candidates);
  const int attempts = std::max(1, opts.router_attempts);
  for (int a = 1; a <= attempts; ++a) {
    record.attempts = a;
    const auto resp = router.complete(req);
    session.latency_ms += resp.latency_ms;
    session.routing_input_tokens += resp.input_tokens;
    session.routing_output_tokens += resp.output_tokens;
    record.classifier_raw = resp.content;
    if (auto choice = parse_option(resp.content, static_cast<int>(out.size()))) {
      record.chosen = *choice;
      session.routing_log.push_back(record);
      return graph.edges()[out[static_cast<std::size_t>(*choice - 1)]].to;
    }
  }
  session.routing_log.push_back(record);
  session.failed = true;
  throw RoutingFailure(record.hub, record.classifier_raw);
}

Conversation run_orchestrated(const ProcedureGraph& graph, const ScenarioSpec& scenario,
                              LlmClient& agent_llm, LlmClient& router_llm, LlmClient& user_llm,
                              const UserSimConfig& user_sim, const RunOptions& opts) {
  OrchestratorSession session(graph, scenario);
  Conversation conv;
  conv.condition = Condition::kSurfaceOrchestrator;
  conv.scenario_id = scenario.scenario_id;
  conv.seed = scenario.seed;
  ConversationTimer timer(opts.simulated_timing);

  for (;;) {
    if (static_cast<int>(session.history.size()) >= opts.turn_cap) {
      conv.terminal = Outcome::kTurnCap;
      break;
    }
    const auto& node = graph.node(session.current_node);
    try {
      if (node.role == Role::kAgent) {
        agent_turn(session, agent_llm, opts);
      } else {
        auto t = user_turn(session.history, session.scenario, user_sim, user_llm);
        session.latency_ms += t.latency_ms;
        t.node_id = node.id;
        session.history.push_back(std::move(t));
        session.visited.push_back(node.id);
      }
    } catch (const AuthError&) {
      throw;
    } catch (const TemplateError&) {
      throw;
    } catch (const Error&) {
      conv.terminal = Outcome::kFailed;
      break;
    }
    if (node.is_terminal()) {
      conv.terminal = outcome_of(*node.terminal_kind);
      break;
    }
    try {
      session.current_node = route(session, router_llm, opts);
    } catch (const AuthError&) {
      throw;
    } catch (const Error&) {
      session.failed = true;
      conv.terminal = Outcome::kFailed;
      break;
    }
  }

  timer.add_latency(session.latency_ms);
  conv.turns = std::move(session.history);
  conv.path = std::move(session.visited);
  conv.routing = std::move(session.routing_log);
  conv.routing_input_tokens = session.routing_input_tokens;
  conv.routing_output_tokens = session.routing_output_tokens;
  conv.wall_clock_s = timer.seconds();
  return conv;
}

}  // namespace flowc
