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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flowc/flowgraph.hpp"
#include "flowc/io.hpp"

namespace flowc {

/// Start-to-terminal walk. Acyclic when produced by enumerate_acyclic_paths;
/// may revisit nodes when produced by sample_path.
struct Path {
  std::vector<NodeId> node_ids;
  TerminalKind terminal_kind = TerminalKind::kSuccess;

  std::size_t turns() const { return node_ids.size(); }
  friend bool operator==(const Path&, const Path&) = default;
  friend auto operator<=>(const Path& a, const Path& b) {
    return a.node_ids <=> b.node_ids;
  }
};

struct PathStats {
  std::size_t path_count = 0;
  std::size_t min_turns = 0;
  std::size_t max_turns = 0;

  friend bool operator==(const PathStats&, const PathStats&) = default;
};

class PathExplosion : public Error {
 public:
  explicit PathExplosion(std::size_t cap)
      : Error("path_explosion",
              "more than " + std::to_string(cap) +
                  " acyclic paths; use sample_path instead"),
        cap_(cap) {}
  std::size_t cap() const { return cap_; }

 private:
  std::size_t cap_;
};

class DeadEnd : public Error {
 public:
  explicit DeadEnd(NodeId node)
      : Error("dead_end", "walk stuck at non-terminal node '" + node +
                              "' with no admissible edge"),
        node_(std::move(node)) {}
  const NodeId& node() const { return node_; }

 private:
  NodeId node_;
};

inline constexpr std::size_t kDefaultPathCap = 1'000'000;

/// All simple start-to-terminal paths in lexicographic order of node ids.
/// Throws PathExplosion once the count exceeds `cap`.
std::vector<Path> enumerate_acyclic_paths(const ProcedureGraph& graph,
                                          std::size_t cap = kDefaultPathCap);

PathStats path_stats(const std::vector<Path>& paths);

/// Optional per-edge sampling weights keyed by (from, to). Edges without an
/// entry weigh 1.
using EdgeWeights = std::map<std::pair<NodeId, NodeId>, double>;

/// Seeded random walk from the start node. At each step the walk picks among
/// outgoing edges whose target has been visited fewer than
/// `max_visits_per_node` times (uniformly unless `weights` says otherwise).
Path sample_path(const ProcedureGraph& graph, std::uint64_t seed,
                 int max_visits_per_node = 2, const EdgeWeights& weights = {});

/// True if `path` starts at the start node, follows graph edges, and ends at
/// a terminal whose kind matches.
bool is_valid_walk(const ProcedureGraph& graph, const Path& path);

Json path_to_json(const Path& path);
Path path_from_json(const Json& j);

}  // namespace flowc
