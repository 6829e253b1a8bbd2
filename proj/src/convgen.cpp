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

#include "flowc/convgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <variant>

#include "flowc/parallel.hpp"
#include "flowc/rng.hpp"

namespace flowc {
namespace {

// Stream ids for derive_seed on a scenario seed.
constexpr std::uint64_t kPathStream = 0x7061746800000001ULL;
constexpr std::uint64_t kRegenStream = 0x7265676e00000000ULL;
constexpr int kMaxWalkRedraws = 64;

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

bool identifier_like(std::string_view id) {
  return std::any_of(id.begin(), id.end(), [](char c) {
    return c == '_' || std::isdigit(static_cast<unsigned char>(c));
  });
}

bool contains_token(std::string_view text, std::string_view token) {
  for (auto pos = text.find(token); pos != std::string_view::npos;
       pos = text.find(token, pos + 1)) {
    const bool left = pos == 0 || !ident_char(text[pos - 1]);
    const auto end = pos + token.size();
    const bool right = end >= text.size() || !ident_char(text[end]);
    if (left && right) return true;
  }
  return false;
}

}  // namespace

ChatRequest generation_request(const ProcedureGraph& graph, const Node& node,
                               const ScenarioSpec& scenario, const std::vector<Turn>& history,
                               const GenerationOptions& opts) {
  (void)graph;
  const bool agent = node.role == Role::kAgent;
  std::string system =
      "You are writing a realistic customer service chat, one message at a time. ";
  system += agent ? "Write the agent's next message." : "Write the customer's next message.";
  system +=
      " Output the message text only: no speaker label, no stage directions, no notes "
      "about the process.\n\nWhat this message should do:\n";
  system += render_template(node.prompt_template, scenario);
  system += "\n\nScenario details:\n";
  for (const auto& [name, value] : scenario.bindings) {
    system += "- " + name + ": " + to_text(value) + "\n";
  }
  if (node.is_terminal()) system += "\nThis is the last message of the chat.";

  ChatRequest req;
  req.messages.push_back({ChatRole::kSystem, std::move(system)});
  std::string user = history.empty() ? std::string("The chat has not started yet.")
                                     : "Chat so far:\n" + render_transcript(history);
  req.messages.push_back({ChatRole::kUser, std::move(user)});
  req.temperature = opts.temperature;
  req.max_output_tokens = opts.max_output_tokens;
  req.tag = agent ? "gen_agent" : "gen_user";
  return req;
}

std::vector<std::string> annotation_leaks(const ProcedureGraph& graph, std::string_view content) {
  std::vector<std::string> leaks;
  if (content.find("{{") != std::string_view::npos) leaks.emplace_back("{{");
  if (content.find("}}") != std::string_view::npos) leaks.emplace_back("}}");
  if (content.find(kSerializedGraphHeader) != std::string_view::npos) {
    leaks.emplace_back(kSerializedGraphHeader);
  }
  for (const auto& n : graph.nodes()) {
    if (identifier_like(n.id) && contains_token(content, n.id)) leaks.push_back(n.id);
  }
  return leaks;
}

Conversation generate_conversation(const ProcedureGraph& graph, const Path& path,
                                   const ScenarioSpec& scenario, LlmClient& llm,
                                   const GenerationOptions& opts,
                                   std::optional<std::uint64_t> request_seed) {
  if (!is_valid_walk(graph, path)) {
    throw std::invalid_argument("path is not a valid walk of the graph");
  }
  Conversation conv;
  conv.condition = Condition::kGenerated;
  conv.scenario_id = scenario.scenario_id;
  conv.seed = scenario.seed;
  conv.terminal = outcome_of(path.terminal_kind);
  conv.path = path.node_ids;

  double latency_ms = 0;
  for (const auto& id : path.node_ids) {
    const auto& node = graph.node(id);
    auto req = generation_request(graph, node, scenario, conv.turns, opts);
    req.seed = request_seed;
    ChatResponse resp;
    try {
      resp = llm.complete(req);
    } catch (const AuthError&) {
      throw;
    } catch (const Error& e) {
      throw GenerationError(e.what(), path, id);
    }
    const auto leaks = annotation_leaks(graph, resp.content);
    if (!leaks.empty()) {
      throw GenerationError("annotation leak '" + leaks.front() + "'", path, id);
    }
    std::string content = strip_end_marker(resp.content, opts.end_marker);
    if (node.is_terminal()) {
      content += " ";
      content += opts.end_marker;
    }
    latency_ms += resp.latency_ms;
    conv.turns.push_back({node.role == Role::kAgent ? Speaker::kAgent : Speaker::kUser,
                          std::move(content), id, resp.input_tokens, resp.output_tokens,
                          resp.latency_ms});
  }
  conv.wall_clock_s = latency_ms / 1000.0;
  return conv;
}

std::vector<Path> assign_paths(const ProcedureGraph& graph, std::size_t n, std::uint64_t seed,
                               int max_visits_per_node) {
  std::vector<Path> enumerated;
  try {
    enumerated = enumerate_acyclic_paths(graph);
  } catch (const PathExplosion&) {
    enumerated.clear();
  }
  std::vector<Path> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < enumerated.size()) {
      out.push_back(enumerated[i]);
    } else {
      // Visit budgets can strand a walk; redraw with the next derived seed.
      std::uint64_t s = derive_seed(derive_seed(seed, i), kPathStream);
      for (int attempt = 0;; ++attempt) {
        try {
          out.push_back(sample_path(graph, s, max_visits_per_node));
          break;
        } catch (const DeadEnd&) {
          if (attempt + 1 >= kMaxWalkRedraws) throw;
          s = derive_seed(s, kPathStream);
        }
      }
    }
  }
  return out;
}

GenerationBatch generate_batch(const ProcedureGraph& graph, const ScenarioSchema& schema,
                               std::size_t n, std::uint64_t seed, LlmClient& llm,
                               const GenerationOptions& opts) {
  const auto scenarios = sample_scenarios(schema, n, seed);
  const auto paths = assign_paths(graph, n, seed, opts.max_visits_per_node);

  using Outcome1 = std::variant<Conversation, GenerationLoss>;
  auto results = parallel_map(n, opts.jobs, [&](std::size_t i) -> Outcome1 {
    const auto& sc = scenarios[i];
    GenerationLoss loss{sc.scenario_id, paths[i], {}, {}};
    for (int attempt = 0; attempt <= opts.regenerations; ++attempt) {
      std::optional<std::uint64_t> req_seed;
      if (attempt > 0) req_seed = derive_seed(sc.seed, kRegenStream + attempt);
      try {
        return generate_conversation(graph, paths[i], sc, llm, opts, req_seed);
      } catch (const AuthError&) {
        throw;
      } catch (const GenerationError& e) {
        loss.node = e.node();
        loss.message = e.what();
      }
    }
    return loss;
  });

  GenerationBatch batch;
  for (auto& r : results) {
    if (auto* c = std::get_if<Conversation>(&r)) {
      batch.conversations.push_back(std::move(*c));
    } else {
      batch.losses.push_back(std::move(std::get<GenerationLoss>(r)));
    }
  }
  return batch;
}

Dataset build_dataset(std::vector<Conversation> convs, double split_fraction, std::uint64_t seed,
                      std::string graph_hash, std::string schema_hash) {
  if (convs.empty()) throw std::invalid_argument("build_dataset needs conversations");
  if (!(split_fraction > 0.0 && split_fraction <= 1.0)) {
    throw std::invalid_argument("split_fraction must lie in (0, 1]");
  }
  std::sort(convs.begin(), convs.end(),
            [](const Conversation& a, const Conversation& b) { return a.scenario_id < b.scenario_id; });
  SplitMix64 rng(seed);
  for (std::size_t i = convs.size() - 1; i > 0; --i) {
    std::swap(convs[i], convs[rng.below(i + 1)]);
  }
  const auto n_train = static_cast<std::size_t>(
      std::llround(static_cast<double>(convs.size()) * split_fraction));

  Dataset ds;
  ds.train.assign(std::make_move_iterator(convs.begin()),
                  std::make_move_iterator(convs.begin() + static_cast<std::ptrdiff_t>(n_train)));
  ds.eval.assign(std::make_move_iterator(convs.begin() + static_cast<std::ptrdiff_t>(n_train)),
                 std::make_move_iterator(convs.end()));
  const auto by_id = [](const Conversation& a, const Conversation& b) {
    return a.scenario_id < b.scenario_id;
  };
  std::stable_sort(ds.train.begin(), ds.train.end(), by_id);
  std::stable_sort(ds.eval.begin(), ds.eval.end(), by_id);
  ds.manifest.graph_hash = std::move(graph_hash);
  ds.manifest.schema_hash = std::move(schema_hash);
  ds.manifest.seeds = {seed};
  ds.manifest.split_fraction = split_fraction;
  ds.manifest.train_count = ds.train.size();
  ds.manifest.eval_count = ds.eval.size();
  return ds;
}

Dataset merge_runs(const std::vector<Dataset>& datasets) {
  if (datasets.empty()) throw std::invalid_argument("merge_runs needs at least one dataset");
  Dataset out;
  out.manifest = datasets.front().manifest;
  out.manifest.seeds.clear();
  out.manifest.generation_losses = 0;
  for (const auto& ds : datasets) {
    if (ds.manifest.graph_hash != out.manifest.graph_hash) {
      throw GraphMismatch("cannot merge datasets built from different graphs (" +
                          out.manifest.graph_hash + " vs " + ds.manifest.graph_hash + ")");
    }
    out.train.insert(out.train.end(), ds.train.begin(), ds.train.end());
    out.eval.insert(out.eval.end(), ds.eval.begin(), ds.eval.end());
    out.manifest.seeds.insert(out.manifest.seeds.end(), ds.manifest.seeds.begin(),
                              ds.manifest.seeds.end());
    out.manifest.generation_losses += ds.manifest.generation_losses;
  }
  out.manifest.train_count = out.train.size();
  out.manifest.eval_count = out.eval.size();
  return out;
}

Json manifest_to_json(const DatasetManifest& m) {
  Json j;
  j["graph_hash"] = m.graph_hash;
  j["schema_hash"] = m.schema_hash;
  j["seeds"] = m.seeds;
  j["split_fraction"] = m.split_fraction;
  j["counts"] = {{"train", m.train_count}, {"eval", m.eval_count}};
  j["generation_losses"] = m.generation_losses;
  return j;
}

DatasetManifest manifest_from_json(const Json& j) {
  DatasetManifest m;
  m.graph_hash = j.at("graph_hash").get<std::string>();
  m.schema_hash = j.value("schema_hash", std::string());
  m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  m.split_fraction = j.value("split_fraction", 0.9);
  m.train_count = j.at("counts").at("train").get<std::size_t>();
  m.eval_count = j.at("counts").at("eval").get<std::size_t>();
  m.generation_losses = j.value("generation_losses", std::size_t{0});
  return m;
}

FinetuneRecord to_finetune_record(const Conversation& conv, const std::string& system_prompt,
                                  const std::string& graph_hash) {
  FinetuneRecord r;
  r.messages.push_back({ChatRole::kSystem, system_prompt});
  for (const auto& t : conv.turns) {
    r.messages.push_back(
        {t.role == Speaker::kAgent ? ChatRole::kAssistant : ChatRole::kUser, t.content});
  }
  r.scenario_id = conv.scenario_id;
  r.seed = conv.seed;
  r.path = conv.path;
  r.graph_hash = graph_hash;
  return r;
}

Json finetune_record_to_json(const FinetuneRecord& r) {
  Json msgs = Json::array();
  for (const auto& m : r.messages) {
    Json jm;
    jm["role"] = std::string(to_string(m.role));
    jm["content"] = m.content;
    msgs.push_back(std::move(jm));
  }
  Json meta;
  meta["scenario_id"] = r.scenario_id;
  meta["seed"] = r.seed;
  meta["path"] = r.path;
  meta["graph_hash"] = r.graph_hash;
  Json j;
  j["messages"] = std::move(msgs);
  j["meta"] = std::move(meta);
  return j;
}

FinetuneRecord finetune_record_from_json(const Json& j) {
  FinetuneRecord r;
  for (const auto& jm : j.at("messages")) {
    const auto role = jm.at("role").get<std::string>();
    ChatRole cr;
    if (role == "system") cr = ChatRole::kSystem;
    else if (role == "user") cr = ChatRole::kUser;
    else if (role == "assistant") cr = ChatRole::kAssistant;
    else throw ConfigError("unknown message role '" + role + "'");
    r.messages.push_back({cr, jm.at("content").get<std::string>()});
  }
  const auto& meta = j.at("meta");
  r.scenario_id = meta.at("scenario_id").get<std::int64_t>();
  r.seed = meta.at("seed").get<std::uint64_t>();
  r.path = meta.at("path").get<std::vector<NodeId>>();
  r.graph_hash = meta.at("graph_hash").get<std::string>();
  return r;
}

namespace {

ExportedFile write_split(const std::vector<Conversation>& convs, const std::string& system_prompt,
                         const std::string& graph_hash, const std::string& path) {
  std::vector<Json> lines;
  lines.reserve(convs.size());
  for (const auto& c : convs) {
    lines.push_back(finetune_record_to_json(to_finetune_record(c, system_prompt, graph_hash)));
  }
  const auto text = to_jsonl(lines);
  write_text_file(path, text);
  return {path, sha256_hex(text), convs.size()};
}

}  // namespace

ExportResult export_finetune(const Dataset& dataset, const std::string& minimal_system_prompt,
                             const std::string& out_dir) {
  if (dataset.train.empty() && dataset.eval.empty()) {
    throw std::invalid_argument("cannot export an empty dataset");
  }
  const std::filesystem::path dir(out_dir);
  ExportResult res;
  const auto& hash = dataset.manifest.graph_hash;
  res.train = write_split(dataset.train, minimal_system_prompt, hash, (dir / "train.jsonl").string());
  res.eval = write_split(dataset.eval, minimal_system_prompt, hash, (dir / "eval.jsonl").string());

  Json m = manifest_to_json(dataset.manifest);
  m["system_prompt"] = minimal_system_prompt;
  m["files"] = {
      {"train", {{"path", "train.jsonl"}, {"sha256", res.train.sha256}, {"records", res.train.records}}},
      {"eval", {{"path", "eval.jsonl"}, {"sha256", res.eval.sha256}, {"records", res.eval.records}}}};
  res.manifest_path = (dir / "manifest.json").string();
  write_text_file(res.manifest_path, m.dump(2) + "\n");
  return res;
}

std::vector<FinetuneRecord> import_finetune(const std::string& path) {
  std::vector<FinetuneRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(finetune_record_from_json(j));
  return out;
}

}  // namespace flowc
