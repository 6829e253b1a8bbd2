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

#include <optional>
#include <string>
#include <vector>

#include "flowc/conversation.hpp"
#include "flowc/flowgraph.hpp"
#include "flowc/llmgate.hpp"
#include "flowc/runtime.hpp"
#include "flowc/scenario.hpp"

namespace flowc {

/// The classifier never produced a usable option number.
class RoutingFailure : public Error {
 public:
  RoutingFailure(NodeId hub, std::string raw)
      : Error("routing_failure", "no valid edge chosen at hub '" + hub + "'"),
        hub_(std::move(hub)),
        raw_(std::move(raw)) {}
  const NodeId& hub() const { return hub_; }
  const std::string& classifier_raw() const { return raw_; }

 private:
  NodeId hub_;
  std::string raw_;
};

// State of one surface-orchestrated conversation: the interpreter walks the
// graph, injecting each node's template and routing at decision hubs.
struct OrchestratorSession {
  OrchestratorSession(const ProcedureGraph& g, ScenarioSpec s)
      : graph(&g), current_node(g.start()), scenario(std::move(s)) {}

  const ProcedureGraph* graph;
  NodeId current_node;
  std::vector<Turn> history;
  std::vector<NodeId> visited;
  ScenarioSpec scenario;
  std::vector<RoutingRecord> routing_log;
  bool failed = false;
  std::int64_t routing_input_tokens = 0;
  std::int64_t routing_output_tokens = 0;
  double latency_ms = 0;  // all calls made by the session
};

/// Prompt for the agent turn at the session's current node.
ChatRequest agent_turn_request(const OrchestratorSession& session, const RunOptions& opts = {});

/// Generates the agent message for the current node and appends it to the
/// history. The current node does not change. Rendering happens before any
/// LLM call, so an unbound placeholder throws TemplateError without spending
/// a request. Terminal agent nodes are allowed: they produce the closing turn.
std::string agent_turn(OrchestratorSession& session, LlmClient& llm, const RunOptions& opts = {});

/// Prompt shown to the routing classifier at a hub.
ChatRequest routing_request(const OrchestratorSession& session,
                            const std::vector<std::pair<int, std::string>>& candidates);

/// First integer token in `reply` that lies in [1, option_count].
std::optional<int> parse_option(std::string_view reply, int option_count);

/// Chooses the next node. A single outgoing edge is followed without an LLM
/// call. At hubs the classifier is asked up to opts.router_attempts times;
/// exhaustion marks the session failed and throws RoutingFailure.
NodeId route(OrchestratorSession& session, LlmClient& router, const RunOptions& opts = {});

/// Full surface-orchestrated conversation. User-role nodes are voiced by the
/// user simulator.
Conversation run_orchestrated(const ProcedureGraph& graph, const ScenarioSpec& scenario,
                              LlmClient& agent_llm, LlmClient& router_llm, LlmClient& user_llm,
                              const UserSimConfig& user_sim, const RunOptions& opts = {});

}  // namespace flowc
