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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowc/error.hpp"

namespace flowc {

using NodeId = std::string;

enum class Role { kAgent, kUser };
enum class NodeKind { kNormal, kTerminal };
enum class TerminalKind { kSuccess, kAbandonment, kEscalation };

std::string_view to_string(Role role);
std::string_view to_string(NodeKind kind);
std::string_view to_string(TerminalKind kind);
std::optional<Role> parse_role(std::string_view text);
std::optional<NodeKind> parse_node_kind(std::string_view text);
std::optional<TerminalKind> parse_terminal_kind(std::string_view text);

struct Node {
  NodeId id;
  Role role = Role::kAgent;
  NodeKind kind = NodeKind::kNormal;
  std::optional<TerminalKind> terminal_kind;
  std::string prompt_template;

  bool is_terminal() const { return kind == NodeKind::kTerminal; }
  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  NodeId from;
  NodeId to;
  std::optional<std::string> condition;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Syntactic content of a flowgraph document. Not necessarily valid; see
// `validate` and `ProcedureGraph::from_document`.
struct FlowDocument {
  std::string version = "1";
  NodeId start;
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  friend bool operator==(const FlowDocument&, const FlowDocument&) = default;
};

struct Violation {
  std::string code;     // e.g. "UNREACHABLE", "TERMINAL_OUTGOING"
  std::string element;  // offending node id or "from->to"
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

/// Malformed document text. `line`/`column` are 1-based; for shape errors
/// found after JSON parsing they are 0 and `pointer` holds the JSON path.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, std::size_t line, std::size_t column,
              std::string pointer = {});
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& pointer() const { return pointer_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string pointer_;
};

/// Graph-level failure carrying the full violation list.
class GraphError : public Error {
 public:
  GraphError(std::string code, ValidationReport violations);
  const ValidationReport& violations() const { return violations_; }

 private:
  ValidationReport violations_;
};

/// An edge or the start field names a node that does not exist.
class ReferenceError : public GraphError {
 public:
  explicit ReferenceError(ValidationReport violations)
      : GraphError("reference_error", std::move(violations)) {}
};

/// Any other invariant violation (unreachable node, terminal with edges, ...).
class StructureError : public GraphError {
 public:
  explicit StructureError(ValidationReport violations)
      : GraphError("structure_error", std::move(violations)) {}
};

/// Checks every graph invariant. Empty report means the document is valid.
ValidationReport validate(const FlowDocument& doc);

/// Placeholder names used by `doc`'s templates that are not in `declared`
/// (code UNDECLARED_PLACEHOLDER), plus malformed templates
/// (code MALFORMED_TEMPLATE).
ValidationReport check_placeholders(const FlowDocument& doc,
                                    const std::vector<std::string>& declared);

/// Immutable, validated procedure graph. Node lookup is by id; outgoing
/// edges preserve document order.
class ProcedureGraph {
 public:
  /// Throws ReferenceError or StructureError when `doc` is invalid.
  static ProcedureGraph from_document(FlowDocument doc);

  const FlowDocument& document() const { return doc_; }
  const NodeId& start() const { return doc_.start; }
  const std::vector<Node>& nodes() const { return doc_.nodes; }
  const std::vector<Edge>& edges() const { return doc_.edges; }

  bool contains(std::string_view id) const;
  const Node& node(std::string_view id) const;
  /// Indices into edges(), in document order.
  const std::vector<std::size_t>& outgoing(std::string_view id) const;
  bool has_edge(std::string_view from, std::string_view to) const;

  bool is_decision_hub(std::string_view id) const;
  std::vector<NodeId> decision_hubs() const;
  std::vector<NodeId> terminals() const;

  /// Hex SHA-256 of the canonical emitted document.
  const std::string& hash() const { return hash_; }

  friend bool operator==(const ProcedureGraph& a, const ProcedureGraph& b) {
    return a.doc_ == b.doc_;
  }

 private:
  explicit ProcedureGraph(FlowDocument doc);

  FlowDocument doc_;
  std::map<NodeId, std::size_t, std::less<>> index_;
  std::vector<std::vector<std::size_t>> out_;
  std::string hash_;
};

/// Syntax-level parse: JSON well-formedness and document shape. Unknown
/// top-level and node keys are rejected.
FlowDocument parse_document(std::string_view text);

/// parse_document followed by full validation.
ProcedureGraph parse_procedure(std::string_view text);
ProcedureGraph load_procedure(const std::string& path);

/// Canonical document text (2-space indented JSON, fixed key order).
std::string emit(const FlowDocument& doc);
inline std::string emit(const ProcedureGraph& g) { return emit(g.document()); }

/// First line of every serialize_for_prompt output. Other prompts can be
/// audited for it to prove that no graph content leaked in.
inline constexpr std::string_view kSerializedGraphHeader =
    "=== PROCEDURE FLOWGRAPH ===";

/// Human-readable rendering for an in-context system prompt. Node blocks
/// start with "NODE " and edges are single "EDGE " lines. Nodes are ordered
/// topologically (back edges found by a lexicographic DFS from the start are
/// ignored), ties broken by id.
std::string serialize_for_prompt(const ProcedureGraph& graph);

/// Node ids in the order used by serialize_for_prompt.
std::vector<NodeId> display_order(const ProcedureGraph& graph);

}  // namespace flowc
