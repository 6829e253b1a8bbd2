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

#include "flowc/flowgraph.hpp"

#include <algorithm>
#include <cctype>
#include <queue>
#include <set>
#include <sstream>

#include "flowc/io.hpp"
#include "flowc/template.hpp"

namespace flowc {
namespace {

constexpr std::string_view kFormatVersion = "1";

std::string join_violations(const ValidationReport& report) {
  std::string out;
  for (const auto& v : report) {
    if (!out.empty()) out += "; ";
    out += v.code + " [" + v.element + "]: " + v.message;
  }
  return out;
}

bool is_token(std::string_view s) {
  if (s.empty()) return false;
  return std::none_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) || std::iscntrl(c);
  });
}

bool is_trimmed_nonempty(std::string_view s) {
  return !s.empty() && !std::isspace(static_cast<unsigned char>(s.front())) &&
         !std::isspace(static_cast<unsigned char>(s.back()));
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text,
                                                std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

[[noreturn]] void shape_error(const std::string& pointer,
                              const std::string& what) {
  throw SyntaxError(pointer + ": " + what, 0, 0, pointer);
}

const std::string& require_string(const Json& obj, const char* key,
                                   const std::string& pointer) {
  auto it = obj.find(key);
  if (it == obj.end()) shape_error(pointer, std::string("missing key '") + key + "'");
  if (!it->is_string())
    shape_error(pointer + "/" + key, "expected a string");
  return it->get_ref<const std::string&>();
}

void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed,
                         const std::string& pointer) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) shape_error(pointer, "unknown key '" + it.key() + "'");
  }
}

}  // namespace

std::string_view to_string(Role role) {
  return role == Role::kAgent ? "agent" : "user";
}
std::string_view to_string(NodeKind kind) {
  return kind == NodeKind::kNormal ? "normal" : "terminal";
}
std::string_view to_string(TerminalKind kind) {
  switch (kind) {
    case TerminalKind::kSuccess: return "success";
    case TerminalKind::kAbandonment: return "abandonment";
    case TerminalKind::kEscalation: return "escalation";
  }
  return "success";
}
std::optional<Role> parse_role(std::string_view text) {
  if (text == "agent") return Role::kAgent;
  if (text == "user") return Role::kUser;
  return std::nullopt;
}
std::optional<NodeKind> parse_node_kind(std::string_view text) {
  if (text == "normal") return NodeKind::kNormal;
  if (text == "terminal") return NodeKind::kTerminal;
  return std::nullopt;
}
std::optional<TerminalKind> parse_terminal_kind(std::string_view text) {
  if (text == "success") return TerminalKind::kSuccess;
  if (text == "abandonment") return TerminalKind::kAbandonment;
  if (text == "escalation") return TerminalKind::kEscalation;
  return std::nullopt;
}

SyntaxError::SyntaxError(const std::string& message, std::size_t line,
                         std::size_t column, std::string pointer)
    : Error("syntax_error",
            line > 0 ? "line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + message
                     : message),
      line_(line),
      column_(column),
      pointer_(std::move(pointer)) {}

GraphError::GraphError(std::string code, ValidationReport violations)
    : Error(std::move(code), join_violations(violations)),
      violations_(std::move(violations)) {}

ValidationReport validate(const FlowDocument& doc) {
  ValidationReport report;
  auto add = [&](std::string code, std::string element, std::string message) {
    report.push_back({std::move(code), std::move(element), std::move(message)});
  };

  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    const auto& n = doc.nodes[i];
    if (!is_token(n.id)) {
      add("INVALID_ID", n.id, "node id must be a nonempty token without whitespace");
    }
    if (!index.emplace(n.id, i).second) {
      add("DUPLICATE_NODE", n.id, "node '" + n.id + "' declared more than once");
    }
    if (n.is_terminal() != n.terminal_kind.has_value()) {
      add("TERMINAL_KIND_MISMATCH", n.id,
          n.is_terminal() ? "terminal node lacks terminal_kind"
                          : "non-terminal node has terminal_kind");
    }
  }

  const bool start_ok = index.count(doc.start) > 0;
  if (!start_ok) {
    add("MISSING_START", doc.start,
        "start node '" + doc.start + "' is not declared");
  }

  std::vector<std::vector<std::size_t>> out(doc.nodes.size());
  std::vector<std::vector<std::size_t>> in(doc.nodes.size());
  for (std::size_t e = 0; e < doc.edges.size(); ++e) {
    const auto& edge = doc.edges[e];
    const auto from = index.find(edge.from);
    const auto to = index.find(edge.to);
    const std::string element = edge.from + "->" + edge.to;
    if (from == index.end()) {
      add("DANGLING_EDGE", element,
          "edge source '" + edge.from + "' is not a declared node");
    }
    if (to == index.end()) {
      add("DANGLING_EDGE", element,
          "edge target '" + edge.to + "' is not a declared node");
    }
    if (edge.condition && !is_trimmed_nonempty(*edge.condition)) {
      add("EMPTY_CONDITION", element,
          "condition must be a nonempty trimmed string");
    }
    if (from != index.end() && to != index.end()) {
      out[from->second].push_back(e);
      in[to->second].push_back(from->second);
    }
  }

  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    const auto& n = doc.nodes[i];
    if (n.is_terminal() && !out[i].empty()) {
      add("TERMINAL_OUTGOING", n.id, "terminal node has outgoing edges");
    }
    if (!n.is_terminal() && out[i].empty()) {
      add("NON_TERMINAL_NO_OUTGOING", n.id, "non-terminal node has no outgoing edges");
    }
    if (out[i].size() >= 2) {
      std::set<std::optional<std::string>> seen;
      for (auto e : out[i]) {
        if (!seen.insert(doc.edges[e].condition).second) {
          const auto& c = doc.edges[e].condition;
          add("DUPLICATE_CONDITION", n.id,
              c ? "condition '" + *c + "' repeats on outgoing edges"
                : "more than one unconditioned outgoing edge");
        }
      }
    }
  }

  if (start_ok) {
    std::vector<bool> seen(doc.nodes.size(), false);
    std::queue<std::size_t> q;
    const auto s = index.at(doc.start);
    seen[s] = true;
    q.push(s);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto e : out[u]) {
        const auto v = index.at(doc.edges[e].to);
        if (!seen[v]) {
          seen[v] = true;
          q.push(v);
        }
      }
    }
    for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
      if (!seen[i]) {
        add("UNREACHABLE", doc.nodes[i].id,
            "node '" + doc.nodes[i].id + "' is not reachable from the start node");
      }
    }
  }

  // Reverse search from terminals.
  std::vector<bool> reaches_terminal(doc.nodes.size(), false);
  std::queue<std::size_t> q;
  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    if (doc.nodes[i].is_terminal()) {
      reaches_terminal[i] = true;
      q.push(i);
    }
  }
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (auto u : in[v]) {
      if (!reaches_terminal[u]) {
        reaches_terminal[u] = true;
        q.push(u);
      }
    }
  }
  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    if (!reaches_terminal[i]) {
      add("NO_TERMINAL_REACHABLE", doc.nodes[i].id,
          "no terminal node is reachable from '" + doc.nodes[i].id + "'");
    }
  }
  return report;
}

ValidationReport check_placeholders(const FlowDocument& doc,
                                    const std::vector<std::string>& declared) {
  ValidationReport report;
  for (const auto& n : doc.nodes) {
    try {
      for (const auto& name : template_placeholders(n.prompt_template)) {
        if (std::find(declared.begin(), declared.end(), name) == declared.end()) {
          report.push_back({"UNDECLARED_PLACEHOLDER", n.id,
                            "placeholder '" + name +
                                "' is not declared in the scenario schema"});
        }
      }
    } catch (const TemplateError& e) {
      report.push_back({"MALFORMED_TEMPLATE", n.id, e.what()});
    }
  }
  return report;
}

ProcedureGraph::ProcedureGraph(FlowDocument doc) : doc_(std::move(doc)) {
  for (std::size_t i = 0; i < doc_.nodes.size(); ++i) index_.emplace(doc_.nodes[i].id, i);
  out_.resize(doc_.nodes.size());
  for (std::size_t e = 0; e < doc_.edges.size(); ++e) {
    out_[index_.at(doc_.edges[e].from)].push_back(e);
  }
  hash_ = sha256_hex(emit(doc_));
}

ProcedureGraph ProcedureGraph::from_document(FlowDocument doc) {
  auto report = validate(doc);
  if (!report.empty()) {
    const bool reference = std::any_of(report.begin(), report.end(), [](const Violation& v) {
      return v.code == "DANGLING_EDGE" || v.code == "MISSING_START";
    });
    if (reference) {
      ValidationReport refs;
      std::copy_if(report.begin(), report.end(), std::back_inserter(refs),
                   [](const Violation& v) {
                     return v.code == "DANGLING_EDGE" || v.code == "MISSING_START";
                   });
      throw ReferenceError(std::move(refs));
    }
    throw StructureError(std::move(report));
  }
  return ProcedureGraph(std::move(doc));
}

bool ProcedureGraph::contains(std::string_view id) const {
  return index_.find(id) != index_.end();
}

const Node& ProcedureGraph::node(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown node '" + std::string(id) + "'");
  return doc_.nodes[it->second];
}

const std::vector<std::size_t>& ProcedureGraph::outgoing(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown node '" + std::string(id) + "'");
  return out_[it->second];
}

bool ProcedureGraph::has_edge(std::string_view from, std::string_view to) const {
  if (!contains(from)) return false;
  const auto& out = outgoing(from);
  return std::any_of(out.begin(), out.end(),
                     [&](std::size_t e) { return doc_.edges[e].to == to; });
}

bool ProcedureGraph::is_decision_hub(std::string_view id) const {
  return outgoing(id).size() >= 2;
}

std::vector<NodeId> ProcedureGraph::decision_hubs() const {
  std::vector<NodeId> hubs;
  for (const auto& n : doc_.nodes)
    if (is_decision_hub(n.id)) hubs.push_back(n.id);
  return hubs;
}

std::vector<NodeId> ProcedureGraph::terminals() const {
  std::vector<NodeId> out;
  for (const auto& n : doc_.nodes)
    if (n.is_terminal()) out.push_back(n.id);
  return out;
}

FlowDocument parse_document(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    if (auto p = what.find("parse error"); p != std::string::npos) what = what.substr(p);
    throw SyntaxError(what, line, col);
  }
  if (!root.is_object()) shape_error("/", "document must be a JSON object");
  reject_unknown_keys(root, {"version", "start", "nodes", "edges"}, "/");

  FlowDocument doc;
  doc.version = require_string(root, "version", "");
  if (doc.version != kFormatVersion) {
    shape_error("/version", "unsupported format version '" + doc.version + "'");
  }
  doc.start = require_string(root, "start", "");

  for (const char* key : {"nodes", "edges"}) {
    auto it = root.find(key);
    if (it == root.end()) shape_error("/", std::string("missing key '") + key + "'");
    if (!it->is_array()) shape_error(std::string("/") + key, "expected an array");
  }

  const auto& nodes = root["nodes"];
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string ptr = "/nodes/" + std::to_string(i);
    const auto& jn = nodes[i];
    if (!jn.is_object()) shape_error(ptr, "expected an object");
    reject_unknown_keys(jn, {"id", "role", "kind", "terminal_kind", "prompt_template"}, ptr);
    Node n;
    n.id = require_string(jn, "id", ptr);
    const auto& role = require_string(jn, "role", ptr);
    auto r = parse_role(role);
    if (!r) shape_error(ptr + "/role", "unknown role '" + role + "'");
    n.role = *r;
    const auto& kind = require_string(jn, "kind", ptr);
    auto k = parse_node_kind(kind);
    if (!k) shape_error(ptr + "/kind", "unknown kind '" + kind + "'");
    n.kind = *k;
    if (jn.contains("terminal_kind")) {
      const auto& tk = require_string(jn, "terminal_kind", ptr);
      auto t = parse_terminal_kind(tk);
      if (!t) shape_error(ptr + "/terminal_kind", "unknown terminal kind '" + tk + "'");
      n.terminal_kind = *t;
    }
    n.prompt_template = require_string(jn, "prompt_template", ptr);
    doc.nodes.push_back(std::move(n));
  }

  const auto& edges = root["edges"];
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string ptr = "/edges/" + std::to_string(i);
    const auto& je = edges[i];
    if (!je.is_object()) shape_error(ptr, "expected an object");
    reject_unknown_keys(je, {"from", "to", "condition"}, ptr);
    Edge e;
    e.from = require_string(je, "from", ptr);
    e.to = require_string(je, "to", ptr);
    if (je.contains("condition")) e.condition = require_string(je, "condition", ptr);
    doc.edges.push_back(std::move(e));
  }
  return doc;
}

ProcedureGraph parse_procedure(std::string_view text) {
  return ProcedureGraph::from_document(parse_document(text));
}

ProcedureGraph load_procedure(const std::string& path) {
  return parse_procedure(read_text_file(path));
}

std::string emit(const FlowDocument& doc) {
  Json root;
  root["version"] = doc.version;
  root["start"] = doc.start;
  root["nodes"] = Json::array();
  for (const auto& n : doc.nodes) {
    Json jn;
    jn["id"] = n.id;
    jn["role"] = to_string(n.role);
    jn["kind"] = to_string(n.kind);
    if (n.terminal_kind) jn["terminal_kind"] = to_string(*n.terminal_kind);
    jn["prompt_template"] = n.prompt_template;
    root["nodes"].push_back(std::move(jn));
  }
  root["edges"] = Json::array();
  for (const auto& e : doc.edges) {
    Json je;
    je["from"] = e.from;
    je["to"] = e.to;
    if (e.condition) je["condition"] = *e.condition;
    root["edges"].push_back(std::move(je));
  }
  return root.dump(2) + "\n";
}

std::vector<NodeId> display_order(const ProcedureGraph& graph) {
  const auto& nodes = graph.nodes();
  std::map<std::string, std::size_t, std::less<>> idx;
  for (std::size_t i = 0; i < nodes.size(); ++i) idx.emplace(nodes[i].id, i);

  auto sorted_targets = [&](std::size_t u) {
    std::vector<std::size_t> t;
    for (auto e : graph.outgoing(nodes[u].id)) t.push_back(idx.at(graph.edges()[e].to));
    std::sort(t.begin(), t.end(),
              [&](std::size_t a, std::size_t b) { return nodes[a].id < nodes[b].id; });
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
  };

  // Iterative DFS marking back edges (u -> v with v on the stack).
  enum class Mark { kWhite, kGrey, kBlack };
  std::vector<Mark> mark(nodes.size(), Mark::kWhite);
  std::set<std::pair<std::size_t, std::size_t>> back;
  struct Frame {
    std::size_t node;
    std::vector<std::size_t> targets;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  const auto s = idx.at(graph.start());
  mark[s] = Mark::kGrey;
  stack.push_back({s, sorted_targets(s)});
  while (!stack.empty()) {
    auto& f = stack.back();
    if (f.next == f.targets.size()) {
      mark[f.node] = Mark::kBlack;
      stack.pop_back();
      continue;
    }
    const auto v = f.targets[f.next++];
    if (mark[v] == Mark::kGrey) {
      back.emplace(f.node, v);
    } else if (mark[v] == Mark::kWhite) {
      mark[v] = Mark::kGrey;
      stack.push_back({v, sorted_targets(v)});
    }
  }

  std::vector<std::size_t> indegree(nodes.size(), 0);
  std::vector<std::vector<std::size_t>> forward(nodes.size());
  for (std::size_t u = 0; u < nodes.size(); ++u) {
    for (auto v : sorted_targets(u)) {
      if (back.count({u, v})) continue;
      forward[u].push_back(v);
      ++indegree[v];
    }
  }
  auto by_id = [&](std::size_t a, std::size_t b) { return nodes[a].id > nodes[b].id; };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(by_id)> ready(by_id);
  for (std::size_t u = 0; u < nodes.size(); ++u)
    if (indegree[u] == 0) ready.push(u);
  std::vector<NodeId> order;
  while (!ready.empty()) {
    const auto u = ready.top();
    ready.pop();
    order.push_back(nodes[u].id);
    for (auto v : forward[u])
      if (--indegree[v] == 0) ready.push(v);
  }
  return order;
}

std::string serialize_for_prompt(const ProcedureGraph& graph) {
  const auto order = display_order(graph);
  std::map<std::string, std::size_t, std::less<>> position;
  for (std::size_t i = 0; i < order.size(); ++i) position.emplace(order[i], i);

  std::ostringstream out;
  out << kSerializedGraphHeader << "\n";
  out << "start: " << graph.start() << "\n";
  out << "nodes: " << graph.nodes().size() << "\n";
  out << "edges: " << graph.edges().size() << "\n";
  for (const auto& id : order) {
    const auto& n = graph.node(id);
    out << "\nNODE " << n.id << "\n";
    out << "  role: " << to_string(n.role) << "\n";
    if (n.is_terminal()) {
      out << "  kind: terminal (" << to_string(*n.terminal_kind) << ")\n";
    } else {
      out << "  kind: normal\n";
    }
    out << "  template: " << n.prompt_template << "\n";
  }
  std::vector<const Edge*> edges;
  for (const auto& e : graph.edges()) edges.push_back(&e);
  std::stable_sort(edges.begin(), edges.end(), [&](const Edge* a, const Edge* b) {
    const auto ka = std::make_tuple(position.at(a->from), position.at(a->to),
                                    a->condition.value_or(""));
    const auto kb = std::make_tuple(position.at(b->from), position.at(b->to),
                                    b->condition.value_or(""));
    return ka < kb;
  });
  out << "\n";
  for (const auto* e : edges) {
    out << "EDGE " << e->from << " -> " << e->to;
    if (e->condition) out << " [if: " << *e->condition << "]";
    out << "\n";
  }
  return out.str();
}

}  // namespace flowc
