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

#include "flowc/pathkit.hpp"

#include <algorithm>
#include <stdexcept>

#include "flowc/rng.hpp"

namespace flowc {

std::vector<Path> enumerate_acyclic_paths(const ProcedureGraph& graph,
                                          std::size_t cap) {
  const auto& nodes = graph.nodes();
  const std::size_t n = nodes.size();
  std::map<std::string, std::size_t, std::less<>> idx;
  for (std::size_t i = 0; i < n; ++i) idx.emplace(nodes[i].id, i);

  // Distinct successors sorted by id so that DFS preorder is lexicographic.
  std::vector<std::vector<std::size_t>> succ(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (auto e : graph.outgoing(nodes[u].id)) succ[u].push_back(idx.at(graph.edges()[e].to));
    std::sort(succ[u].begin(), succ[u].end(),
              [&](std::size_t a, std::size_t b) { return nodes[a].id < nodes[b].id; });
    succ[u].erase(std::unique(succ[u].begin(), succ[u].end()), succ[u].end());
  }

  std::vector<Path> paths;
  std::vector<bool> on_path(n, false);
  std::vector<std::size_t> stack_nodes;
  std::vector<std::size_t> next_child;

  const auto s = idx.at(graph.start());
  stack_nodes.push_back(s);
  next_child.push_back(0);
  on_path[s] = true;

  while (!stack_nodes.empty()) {
    const auto u = stack_nodes.back();
    if (nodes[u].is_terminal()) {
      if (paths.size() == cap) throw PathExplosion(cap);
      Path p;
      p.node_ids.reserve(stack_nodes.size());
      for (auto v : stack_nodes) p.node_ids.push_back(nodes[v].id);
      p.terminal_kind = *nodes[u].terminal_kind;
      paths.push_back(std::move(p));
    }
    auto& k = next_child.back();
    while (k < succ[u].size() && on_path[succ[u][k]]) ++k;
    if (k == succ[u].size()) {
      on_path[u] = false;
      stack_nodes.pop_back();
      next_child.pop_back();
      continue;
    }
    const auto v = succ[u][k++];
    on_path[v] = true;
    stack_nodes.push_back(v);
    next_child.push_back(0);
  }
  return paths;
}

PathStats path_stats(const std::vector<Path>& paths) {
  PathStats s;
  if (paths.empty()) return s;
  s.path_count = paths.size();
  s.min_turns = paths.front().turns();
  s.max_turns = paths.front().turns();
  for (const auto& p : paths) {
    s.min_turns = std::min(s.min_turns, p.turns());
    s.max_turns = std::max(s.max_turns, p.turns());
  }
  return s;
}

Path sample_path(const ProcedureGraph& graph, std::uint64_t seed,
                 int max_visits_per_node, const EdgeWeights& weights) {
  if (max_visits_per_node < 1) {
    throw std::invalid_argument("max_visits_per_node must be >= 1");
  }
  SplitMix64 rng(seed);
  std::map<std::string, int, std::less<>> visits;
  Path path;
  NodeId current = graph.start();
  visits[current] = 1;
  path.node_ids.push_back(current);

  while (!graph.node(current).is_terminal()) {
    std::vector<const Edge*> admissible;
    std::vector<double> w;
    for (auto e : graph.outgoing(current)) {
      const auto& edge = graph.edges()[e];
      if (visits[edge.to] >= max_visits_per_node) continue;
      admissible.push_back(&edge);
      auto it = weights.find({edge.from, edge.to});
      w.push_back(it == weights.end() ? 1.0 : it->second);
    }
    if (admissible.empty()) throw DeadEnd(current);

    std::size_t pick = 0;
    if (weights.empty()) {
      pick = static_cast<std::size_t>(rng.below(admissible.size()));
    } else {
      double total = 0;
      for (double x : w) total += x;
      double r = rng.uniform() * total;
      pick = admissible.size() - 1;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (r < w[i]) {
          pick = i;
          break;
        }
        r -= w[i];
      }
    }
    current = admissible[pick]->to;
    ++visits[current];
    path.node_ids.push_back(current);
  }
  path.terminal_kind = *graph.node(current).terminal_kind;
  return path;
}

bool is_valid_walk(const ProcedureGraph& graph, const Path& path) {
  if (path.node_ids.empty() || path.node_ids.front() != graph.start()) return false;
  for (std::size_t i = 0; i + 1 < path.node_ids.size(); ++i) {
    if (!graph.has_edge(path.node_ids[i], path.node_ids[i + 1])) return false;
  }
  if (!graph.contains(path.node_ids.back())) return false;
  const auto& last = graph.node(path.node_ids.back());
  return last.is_terminal() && last.terminal_kind == path.terminal_kind;
}

Json path_to_json(const Path& path) {
  Json j;
  j["nodes"] = path.node_ids;
  j["terminal_kind"] = to_string(path.terminal_kind);
  return j;
}

Path path_from_json(const Json& j) {
  Path p;
  p.node_ids = j.at("nodes").get<std::vector<NodeId>>();
  auto kind = parse_terminal_kind(j.at("terminal_kind").get<std::string>());
  if (!kind) throw IoError("unknown terminal_kind in path record");
  p.terminal_kind = *kind;
  return p;
}

}  // namespace flowc
