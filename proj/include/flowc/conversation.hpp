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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowc/flowgraph.hpp"
#include "flowc/io.hpp"

namespace flowc {

inline constexpr std::string_view kEndMarker = "<END_OF_CONVERSATION>";

enum class Speaker { kAgent, kUser };

// kGenerated marks synthetic training conversations produced by convgen.
enum class Condition { kSubterranean, kSurfaceOrchestrator, kInContext, kGenerated };

enum class Outcome { kSuccess, kAbandonment, kEscalation, kFailed, kTurnCap };

std::string_view to_string(Speaker s);
std::string_view to_string(Condition c);
std::string_view to_string(Outcome o);
std::optional<Condition> parse_condition(std::string_view text);
std::optional<Outcome> parse_outcome(std::string_view text);
Outcome outcome_of(TerminalKind kind);

struct Turn {
  Speaker role = Speaker::kAgent;
  std::string content;
  std::optional<NodeId> node_id;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double latency_ms = 0;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct RoutingRecord {
  NodeId hub;
  // (1-based option number, condition label) in outgoing-edge order.
  std::vector<std::pair<int, std::string>> candidates;
  std::string classifier_raw;
  std::optional<int> chosen;  // option number; nullopt = FAILURE
  int attempts = 0;

  friend bool operator==(const RoutingRecord&, const RoutingRecord&) = default;
};

struct Conversation {
  std::vector<Turn> turns;
  Condition condition = Condition::kSubterranean;
  std::int64_t scenario_id = 0;
  std::uint64_t seed = 0;
  Outcome terminal = Outcome::kSuccess;
  double wall_clock_s = 0;
  std::vector<NodeId> path;  // visited nodes, when a graph drove the dialogue
  std::vector<RoutingRecord> routing;
  std::int64_t routing_input_tokens = 0;
  std::int64_t routing_output_tokens = 0;

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

/// True if turns alternate agent/user starting with the agent.
bool alternates(const Conversation& conv);

bool end_detection(std::string_view agent_message, std::string_view marker = kEndMarker);
/// Removes every occurrence of `marker` and trailing whitespace.
std::string strip_end_marker(std::string_view text, std::string_view marker = kEndMarker);

/// "Agent: ...\nCustomer: ..." with end markers removed.
std::string render_transcript(const std::vector<Turn>& turns,
                              std::string_view agent_label = "Agent",
                              std::string_view user_label = "Customer");

Json routing_to_json(const RoutingRecord& r);
Json conversation_to_json(const Conversation& conv);
Conversation conversation_from_json(const Json& j);

std::vector<Conversation> load_conversations(const std::string& path);
void save_conversations(const std::string& path, const std::vector<Conversation>& convs);

}  // namespace flowc
