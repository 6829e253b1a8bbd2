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

#include "flowc/conversation.hpp"

#include <cctype>

namespace flowc {

std::string_view to_string(Speaker s) { return s == Speaker::kAgent ? "agent" : "user"; }

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kSubterranean: return "subterranean";
    case Condition::kSurfaceOrchestrator: return "surface_orchestrator";
    case Condition::kInContext: return "in_context";
    case Condition::kGenerated: return "generated";
  }
  return "generated";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kSuccess: return "success";
    case Outcome::kAbandonment: return "abandonment";
    case Outcome::kEscalation: return "escalation";
    case Outcome::kFailed: return "FAILED";
    case Outcome::kTurnCap: return "TURN_CAP";
  }
  return "FAILED";
}

std::optional<Condition> parse_condition(std::string_view text) {
  for (auto c : {Condition::kSubterranean, Condition::kSurfaceOrchestrator,
                 Condition::kInContext, Condition::kGenerated})
    if (to_string(c) == text) return c;
  return std::nullopt;
}

std::optional<Outcome> parse_outcome(std::string_view text) {
  for (auto o : {Outcome::kSuccess, Outcome::kAbandonment, Outcome::kEscalation,
                 Outcome::kFailed, Outcome::kTurnCap})
    if (to_string(o) == text) return o;
  return std::nullopt;
}

Outcome outcome_of(TerminalKind kind) {
  switch (kind) {
    case TerminalKind::kSuccess: return Outcome::kSuccess;
    case TerminalKind::kAbandonment: return Outcome::kAbandonment;
    case TerminalKind::kEscalation: return Outcome::kEscalation;
  }
  return Outcome::kSuccess;
}

bool alternates(const Conversation& conv) {
  for (std::size_t i = 0; i < conv.turns.size(); ++i) {
    const auto expected = i % 2 == 0 ? Speaker::kAgent : Speaker::kUser;
    if (conv.turns[i].role != expected) return false;
  }
  return true;
}

bool end_detection(std::string_view agent_message, std::string_view marker) {
  return !marker.empty() && agent_message.find(marker) != std::string_view::npos;
}

std::string strip_end_marker(std::string_view text, std::string_view marker) {
  std::string out(text);
  if (!marker.empty()) {
    for (auto p = out.find(marker); p != std::string::npos; p = out.find(marker, p))
      out.erase(p, marker.size());
  }
  while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
  return out;
}

std::string render_transcript(const std::vector<Turn>& turns, std::string_view agent_label,
                              std::string_view user_label) {
  std::string out;
  for (const auto& t : turns) {
    out += t.role == Speaker::kAgent ? agent_label : user_label;
    out += ": ";
    out += strip_end_marker(t.content);
    out += '\n';
  }
  return out;
}

Json routing_to_json(const RoutingRecord& r) {
  Json j;
  j["hub"] = r.hub;
  j["candidates"] = Json::array();
  for (const auto& [n, label] : r.candidates)
    j["candidates"].push_back({{"option", n}, {"condition", label}});
  j["classifier_raw"] = r.classifier_raw;
  if (r.chosen) {
    j["chosen"] = *r.chosen;
  } else {
    j["chosen"] = "FAILURE";
  }
  j["attempts"] = r.attempts;
  return j;
}

Json conversation_to_json(const Conversation& conv) {
  Json j;
  j["scenario_id"] = conv.scenario_id;
  j["seed"] = conv.seed;
  j["condition"] = to_string(conv.condition);
  j["terminal"] = to_string(conv.terminal);
  j["wall_clock_s"] = conv.wall_clock_s;
  j["turns"] = Json::array();
  for (const auto& t : conv.turns) {
    Json jt;
    jt["role"] = to_string(t.role);
    jt["content"] = t.content;
    if (t.node_id) jt["node_id"] = *t.node_id;
    jt["input_tokens"] = t.input_tokens;
    jt["output_tokens"] = t.output_tokens;
    jt["latency_ms"] = t.latency_ms;
    j["turns"].push_back(std::move(jt));
  }
  j["path"] = conv.path;
  j["routing"] = Json::array();
  for (const auto& r : conv.routing) j["routing"].push_back(routing_to_json(r));
  j["routing_input_tokens"] = conv.routing_input_tokens;
  j["routing_output_tokens"] = conv.routing_output_tokens;
  return j;
}

Conversation conversation_from_json(const Json& j) {
  Conversation c;
  c.scenario_id = j.at("scenario_id").get<std::int64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  auto cond = parse_condition(j.at("condition").get<std::string>());
  if (!cond) throw IoError("unknown condition in conversation record");
  c.condition = *cond;
  auto term = parse_outcome(j.at("terminal").get<std::string>());
  if (!term) throw IoError("unknown terminal in conversation record");
  c.terminal = *term;
  c.wall_clock_s = j.at("wall_clock_s").get<double>();
  for (const auto& jt : j.at("turns")) {
    Turn t;
    t.role = jt.at("role").get<std::string>() == "agent" ? Speaker::kAgent : Speaker::kUser;
    t.content = jt.at("content").get<std::string>();
    if (jt.contains("node_id")) t.node_id = jt["node_id"].get<std::string>();
    t.input_tokens = jt.value("input_tokens", std::int64_t{0});
    t.output_tokens = jt.value("output_tokens", std::int64_t{0});
    t.latency_ms = jt.value("latency_ms", 0.0);
    c.turns.push_back(std::move(t));
  }
  c.path = j.value("path", std::vector<NodeId>{});
  for (const auto& jr : j.value("routing", Json::array())) {
    RoutingRecord r;
    r.hub = jr.at("hub").get<std::string>();
    for (const auto& cand : jr.at("candidates"))
      r.candidates.emplace_back(cand.at("option").get<int>(), cand.at("condition").get<std::string>());
    r.classifier_raw = jr.at("classifier_raw").get<std::string>();
    if (jr.at("chosen").is_number_integer()) r.chosen = jr["chosen"].get<int>();
    r.attempts = jr.at("attempts").get<int>();
    c.routing.push_back(std::move(r));
  }
  c.routing_input_tokens = j.value("routing_input_tokens", std::int64_t{0});
  c.routing_output_tokens = j.value("routing_output_tokens", std::int64_t{0});
  return c;
}

std::vector<Conversation> load_conversations(const std::string& path) {
  std::vector<Conversation> out;
  for (const auto& j : read_jsonl(path)) out.push_back(conversation_from_json(j));
  return out;
}

void save_conversations(const std::string& path, const std::vector<Conversation>& convs) {
  std::vector<Json> lines;
  lines.reserve(convs.size());
  for (const auto& c : convs) lines.push_back(conversation_to_json(c));
  write_text_file(path, to_jsonl(lines));
}

}  // namespace flowc
