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
#include <string>
#include <vector>

#include "flowc/conversation.hpp"
#include "flowc/flowgraph.hpp"
#include "flowc/llmgate.hpp"
#include "flowc/pathkit.hpp"
#include "flowc/scenario.hpp"

namespace flowc {

struct GenerationOptions {
  int max_visits_per_node = 2;
  double temperature = 0.8;
  int max_output_tokens = 512;
  int regenerations = 3;  // extra attempts after a failed generation
  int jobs = 1;
  std::string end_marker{kEndMarker};
};

/// A conversation could not be generated. Carries the path and the node at
/// which generation stopped.
class GenerationError : public Error {
 public:
  GenerationError(const std::string& message, Path path, NodeId node)
      : Error("generation_error", message), path_(std::move(path)), node_(std::move(node)) {}
  const Path& path() const { return path_; }
  const NodeId& node() const { return node_; }

 private:
  Path path_;
  NodeId node_;
};

class GraphMismatch : public Error {
 public:
  explicit GraphMismatch(const std::string& message) : Error("graph_mismatch", message) {}
};

/// Generator prompt for `node`, given the turns produced so far.
ChatRequest generation_request(const ProcedureGraph& graph, const Node& node,
                               const ScenarioSpec& scenario, const std::vector<Turn>& history,
                               const GenerationOptions& opts = {});

/// Strings found in `content` that must never reach training data: template
/// syntax, identifier-like node ids, the serialized-graph header.
std::vector<std::string> annotation_leaks(const ProcedureGraph& graph, std::string_view content);

/// One LLM call per node along `path`. Agent nodes give agent turns, user
/// nodes give user turns; the terminal turn ends with the end marker. Any
/// LLM error or annotation leak throws GenerationError and nothing is kept.
Conversation generate_conversation(const ProcedureGraph& graph, const Path& path,
                                   const ScenarioSpec& scenario, LlmClient& llm,
                                   const GenerationOptions& opts = {},
                                   std::optional<std::uint64_t> request_seed = std::nullopt);

/// Path for each of n conversations: every enumerated acyclic path once in
/// lexicographic order, then seeded samples (a walk stranded by the visit
/// budget is redrawn). Falls back to sampling only when enumeration explodes.
std::vector<Path> assign_paths(const ProcedureGraph& graph, std::size_t n, std::uint64_t seed,
                               int max_visits_per_node = 2);

struct GenerationLoss {
  std::int64_t scenario_id = 0;
  Path path;
  NodeId node;
  std::string message;
};

struct GenerationBatch {
  std::vector<Conversation> conversations;  // ordered by scenario_id
  std::vector<GenerationLoss> losses;
};

/// Generates n conversations. A failed conversation is retried with fresh
/// derived request seeds up to opts.regenerations times before it counts as
/// a loss.
GenerationBatch generate_batch(const ProcedureGraph& graph, const ScenarioSchema& schema,
                               std::size_t n, std::uint64_t seed, LlmClient& llm,
                               const GenerationOptions& opts = {});

struct DatasetManifest {
  std::string graph_hash;
  std::string schema_hash;
  std::vector<std::uint64_t> seeds;
  double split_fraction = 0.9;
  std::size_t train_count = 0;
  std::size_t eval_count = 0;
  std::size_t generation_losses = 0;
};

struct Dataset {
  std::vector<Conversation> train;
  std::vector<Conversation> eval;
  DatasetManifest manifest;
};

/// Seeded shuffle, then the first round(n * f) conversations go to train.
/// Both splits are returned ordered by scenario_id.
Dataset build_dataset(std::vector<Conversation> convs, double split_fraction, std::uint64_t seed,
                      std::string graph_hash = {}, std::string schema_hash = {});

/// Concatenates splits in run order without deduplication.
Dataset merge_runs(const std::vector<Dataset>& datasets);

Json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const Json& j);

struct FinetuneRecord {
  std::vector<ChatMessage> messages;
  std::int64_t scenario_id = 0;
  std::uint64_t seed = 0;
  std::vector<NodeId> path;
  std::string graph_hash;
};

FinetuneRecord to_finetune_record(const Conversation& conv, const std::string& system_prompt,
                                  const std::string& graph_hash);
Json finetune_record_to_json(const FinetuneRecord& r);
FinetuneRecord finetune_record_from_json(const Json& j);

struct ExportedFile {
  std::string path;
  std::string sha256;
  std::size_t records = 0;
};

struct ExportResult {
  ExportedFile train;
  ExportedFile eval;
  std::string manifest_path;
};

/// Writes train.jsonl, eval.jsonl and manifest.json into `out_dir`.
ExportResult export_finetune(const Dataset& dataset, const std::string& minimal_system_prompt,
                             const std::string& out_dir);

std::vector<FinetuneRecord> import_finetune(const std::string& path);

}  // namespace flowc
