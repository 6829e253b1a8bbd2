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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowc/conversation.hpp"
#include "flowc/convgen.hpp"
#include "flowc/costmodel.hpp"
#include "flowc/flowgraph.hpp"
#include "flowc/judge.hpp"
#include "flowc/llmgate.hpp"
#include "flowc/pathkit.hpp"
#include "flowc/scenario.hpp"
#include "flowc/stats.hpp"

namespace flowc {

// Provider roles looked up in the config's "providers" object.
inline constexpr std::string_view kGeneratorProvider = "generator";
inline constexpr std::string_view kAgentProvider = "agent";
inline constexpr std::string_view kRouterProvider = "router";
inline constexpr std::string_view kUserSimProvider = "user_sim";
inline constexpr std::string_view kJudgeProvider = "judge";
inline constexpr std::string_view kSecondaryJudgeProvider = "judge_secondary";
inline constexpr std::string_view kCompiledProvider = "compiled";

struct PipelineConfig {
  std::string domain;
  std::string graph_path;
  std::string schema_path;
  std::string rubric_path;
  std::string prices_path;
  std::map<std::string, ProviderConfig> providers;
  std::string minimal_system_prompt;
  std::string persona_template;
  std::uint64_t seed = 0;

  std::size_t gen_n = 100;
  double split_fraction = 0.9;
  int max_visits_per_node = 2;
  double gen_temperature = 0.8;

  std::size_t eval_n = 20;
  int turn_cap = 60;
  std::size_t spot_check_n = 50;
  std::size_t resamples = kDefaultResamples;

  std::string trainer_preset;
  int jobs = 1;
  std::string output_dir = "out";

  /// True when every provider is scripted.
  bool offline() const;
};

/// Replaces ${NAME} in every string of `j` with the environment value.
/// Throws ConfigError for unset variables.
Json interpolate_env(const Json& j);

/// Parses a pipeline config. Relative paths resolve against `base_dir`.
/// "providers" is either an object or a path to a JSON file holding one.
PipelineConfig parse_pipeline_config(std::string_view text, const std::string& base_dir);
PipelineConfig load_pipeline_config(const std::string& path);

/// Store file name `{domain}.{condition}.{seed}.convs.jsonl`.
std::string store_file_name(const std::string& domain, std::string_view condition,
                            std::uint64_t seed);

struct StageTiming {
  std::string stage;
  double seconds = 0;
  std::string detail;
};

struct PipelineStatus {
  std::vector<std::string> written;  // files, relative to the output dir
  std::vector<StageTiming> stages;
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }
  const ProcedureGraph& graph() const { return *graph_; }
  const ScenarioSchema& schema() const { return schema_; }

  /// Structural report plus placeholder checks against the schema.
  std::vector<Violation> validate() const;

  PathStats enumerate(std::vector<Path>* paths = nullptr) const;

  /// Generates the training conversations and writes the generated store
  /// and the loss log.
  GenerationBatch gen_data();

  /// Builds the dataset from the generated store and writes the export.
  ExportResult export_data();

  /// Writes the trainer request next to the export. Needs export_data().
  std::string trainer_request();

  /// Scenarios shared by every evaluated condition.
  std::vector<ScenarioSpec> eval_scenarios(std::size_t n) const;

  /// Runs one condition over n paired scenarios and writes its store.
  std::vector<Conversation> run(Condition condition, std::size_t n);

  /// Scores every stored condition (or only `only`). A secondary judge, if
  /// configured, writes a second card set.
  std::vector<std::string> judge(std::optional<Condition> only = std::nullopt);

  /// Paired comparisons between all judged condition pairs.
  std::vector<std::string> stats();

  std::vector<std::string> cost();

  /// Markdown and CSV summary of whatever artifacts exist.
  std::vector<std::string> report();

  /// gen-data, export, trainer request, then a spot check: compiled and
  /// in-context runs on spot_check_n scenarios, judged, compared and costed.
  /// Requires offline providers when `dry_run` is set.
  std::vector<StageTiming> recompile(bool dry_run);

  std::string output_path(const std::string& relative) const;

 private:
  LlmClient& client(std::string_view role);
  std::string store_path(std::string_view condition) const;
  std::string cards_path(std::string_view condition, const std::string& judge_label) const;

  PipelineConfig config_;
  std::unique_ptr<ProcedureGraph> graph_;
  ScenarioSchema schema_;
  std::shared_ptr<UsageLedger> ledger_;
  std::map<std::string, std::unique_ptr<LlmClient>> clients_;
};

/// Fixed-width stage timing table.
std::string format_stage_table(const std::vector<StageTiming>& stages);

}  // namespace flowc
