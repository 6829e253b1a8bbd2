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

#include "flowc/pipeline.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "flowc/orchestrator.hpp"
#include "flowc/parallel.hpp"
#include "flowc/rng.hpp"
#include "flowc/runtime.hpp"

namespace fs = std::filesystem;

namespace flowc {
namespace {

constexpr std::uint64_t kEvalStream = 0x6576616cULL;
constexpr std::uint64_t kStatsStream = 0x73746174ULL;

constexpr std::array<Condition, 3> kRunConditions = {
    Condition::kSubterranean, Condition::kSurfaceOrchestrator, Condition::kInContext};

// (a, b) pairs compared by `stats`, first condition is "a".
constexpr std::array<std::pair<Condition, Condition>, 3> kComparisons = {{
    {Condition::kSubterranean, Condition::kInContext},
    {Condition::kSubterranean, Condition::kSurfaceOrchestrator},
    {Condition::kSurfaceOrchestrator, Condition::kInContext},
}};

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base) / path).lexically_normal().string();
}

std::string require_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw ConfigError(std::string("config needs string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

std::string schema_hash(const ScenarioSchema& schema) {
  return sha256_hex(schema_to_json(schema).dump());
}

}  // namespace

bool PipelineConfig::offline() const {
  for (const auto& [role, p] : providers) {
    if (p.kind != ProviderKind::kScripted) return false;
  }
  return true;
}

Json interpolate_env(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
      if (s.compare(i, 2, "${") == 0) {
        const auto close = s.find('}', i + 2);
        if (close == std::string::npos) throw ConfigError("unterminated ${ in '" + s + "'");
        const auto name = s.substr(i + 2, close - i - 2);
        const char* value = std::getenv(name.c_str());
        if (value == nullptr) throw ConfigError("environment variable '" + name + "' is not set");
        out += value;
        i = close + 1;
      } else {
        out += s[i++];
      }
    }
    return out;
  }
  if (j.is_object()) {
    Json out = Json::object();
    for (const auto& [k, v] : j.items()) out[k] = interpolate_env(v);
    return out;
  }
  if (j.is_array()) {
    Json out = Json::array();
    for (const auto& v : j) out.push_back(interpolate_env(v));
    return out;
  }
  return j;
}

PipelineConfig parse_pipeline_config(std::string_view text, const std::string& base_dir) {
  Json raw;
  try {
    raw = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!raw.is_object()) throw ConfigError("config must be a JSON object");
  const Json j = interpolate_env(raw);

  PipelineConfig c;
  try {
    c.domain = require_string(j, "domain");
    c.graph_path = resolve(base_dir, require_string(j, "graph"));
    c.schema_path = resolve(base_dir, require_string(j, "schema"));
    c.rubric_path = resolve(base_dir, j.value("rubric", std::string()));
    c.prices_path = resolve(base_dir, j.value("prices", std::string()));
    c.minimal_system_prompt = require_string(j, "minimal_system_prompt");
    c.persona_template = j.value("persona_template", std::string());
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("generation")) {
      const auto& g = j["generation"];
      c.gen_n = g.value("n", c.gen_n);
      c.split_fraction = g.value("split_fraction", c.split_fraction);
      c.max_visits_per_node = g.value("max_visits_per_node", c.max_visits_per_node);
      c.gen_temperature = g.value("temperature", c.gen_temperature);
    }
    if (j.contains("evaluation")) {
      const auto& e = j["evaluation"];
      c.eval_n = e.value("n", c.eval_n);
      c.turn_cap = e.value("turn_cap", c.turn_cap);
      c.spot_check_n = e.value("spot_check", c.spot_check_n);
      c.resamples = e.value("resamples", c.resamples);
    }
    c.trainer_preset = j.value("trainer_preset", std::string());
    c.jobs = j.value("jobs", 1);
    c.output_dir = j.value("output_dir", c.output_dir);

    Json providers;
    if (!j.contains("providers")) throw ConfigError("config needs 'providers'");
    if (j["providers"].is_string()) {
      const auto path = resolve(base_dir, j["providers"].get<std::string>());
      try {
        providers = interpolate_env(Json::parse(read_text_file(path)));
      } catch (const Json::parse_error& e) {
        throw ConfigError("providers file " + path + " is not valid JSON: " + e.what());
      }
    } else {
      providers = j["providers"];
    }
    if (!providers.is_object()) throw ConfigError("'providers' must be an object");
    for (const auto& [role, pj] : providers.items()) {
      auto p = provider_from_json(pj);
      p.check();
      c.providers.emplace(role, std::move(p));
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.gen_n < 1 || c.eval_n < 1) throw ConfigError("sample sizes must be at least 1");
  if (!(c.split_fraction > 0 && c.split_fraction <= 1)) {
    throw ConfigError("split_fraction must lie in (0, 1]");
  }
  return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  const auto base = fs::path(path).parent_path().string();
  return parse_pipeline_config(read_text_file(path), base.empty() ? "." : base);
}

std::string store_file_name(const std::string& domain, std::string_view condition,
                            std::uint64_t seed) {
  return domain + "." + std::string(condition) + "." + std::to_string(seed) + ".convs.jsonl";
}

std::string format_stage_table(const std::vector<StageTiming>& stages) {
  std::size_t w = 5;
  for (const auto& s : stages) w = std::max(w, s.stage.size());
  auto pad = [](std::string s, std::size_t n) {
    s.resize(std::max(n, s.size()), ' ');
    return s;
  };
  std::string out = pad("stage", w) + "  " + pad("seconds", 9) + "  detail\n";
  double total = 0;
  for (const auto& s : stages) {
    out += pad(s.stage, w) + "  " + pad(fmt(s.seconds, "%9.3f"), 9) + "  " + s.detail + "\n";
    total += s.seconds;
  }
  out += pad("total", w) + "  " + pad(fmt(total, "%9.3f"), 9) + "\n";
  return out;
}

Pipeline::Pipeline(PipelineConfig config)
    : config_(std::move(config)), ledger_(std::make_shared<UsageLedger>()) {
  graph_ = std::make_unique<ProcedureGraph>(load_procedure(config_.graph_path));
  schema_ = load_schema(config_.schema_path);
}

std::string Pipeline::output_path(const std::string& relative) const {
  return (fs::path(config_.output_dir) / relative).string();
}

std::string Pipeline::store_path(std::string_view condition) const {
  return output_path("store/" + store_file_name(config_.domain, condition, config_.seed));
}

std::string Pipeline::cards_path(std::string_view condition, const std::string& judge_label) const {
  std::string name = config_.domain + "." + std::string(condition) + "." +
                     std::to_string(config_.seed) + ".cards";
  if (judge_label != "primary") name += "." + judge_label;
  return output_path("judge/" + name + ".jsonl");
}

LlmClient& Pipeline::client(std::string_view role) {
  const std::string key(role);
  if (auto it = clients_.find(key); it != clients_.end()) return *it->second;
  const auto p = config_.providers.find(key);
  if (p == config_.providers.end()) {
    throw ConfigError("no provider configured for role '" + key + "'");
  }
  auto [it, _] = clients_.emplace(key, std::make_unique<LlmClient>(p->second, ledger_));
  return *it->second;
}

std::vector<Violation> Pipeline::validate() const {
  auto report = flowc::validate(graph_->document());
  const auto ph = check_placeholders(graph_->document(), schema_.names());
  report.insert(report.end(), ph.begin(), ph.end());
  return report;
}

PathStats Pipeline::enumerate(std::vector<Path>* paths) const {
  auto all = enumerate_acyclic_paths(*graph_);
  const auto s = path_stats(all);
  if (paths != nullptr) *paths = std::move(all);
  return s;
}

GenerationBatch Pipeline::gen_data() {
  GenerationOptions opts;
  opts.max_visits_per_node = config_.max_visits_per_node;
  opts.temperature = config_.gen_temperature;
  opts.jobs = config_.jobs;
  auto batch =
      generate_batch(*graph_, schema_, config_.gen_n, config_.seed, client(kGeneratorProvider), opts);
  save_conversations(store_path("generated"), batch.conversations);
  std::vector<Json> losses;
  for (const auto& l : batch.losses) {
    Json j;
    j["scenario_id"] = l.scenario_id;
    j["path"] = path_to_json(l.path);
    j["node"] = l.node;
    j["message"] = l.message;
    losses.push_back(std::move(j));
  }
  write_text_file(output_path("store/" + config_.domain + ".generated." +
                              std::to_string(config_.seed) + ".losses.jsonl"),
                  to_jsonl(losses));
  return batch;
}

ExportResult Pipeline::export_data() {
  const auto store = store_path("generated");
  if (!fs::exists(store)) throw IoError("generated store missing: run gen-data first (" + store + ")");
  auto convs = load_conversations(store);
  if (convs.empty()) throw ConfigError("generated store is empty; every generation failed");
  auto ds = build_dataset(std::move(convs), config_.split_fraction, config_.seed, graph_->hash(),
                          schema_hash(schema_));
  const auto losses_path = output_path("store/" + config_.domain + ".generated." +
                                       std::to_string(config_.seed) + ".losses.jsonl");
  if (fs::exists(losses_path)) ds.manifest.generation_losses = read_jsonl(losses_path).size();
  return export_finetune(ds, config_.minimal_system_prompt, output_path("dataset"));
}

std::string Pipeline::trainer_request() {
  const auto manifest_path = output_path("dataset/manifest.json");
  if (!fs::exists(manifest_path)) throw IoError("dataset manifest missing: run export first");
  const auto manifest = Json::parse(read_text_file(manifest_path));
  Json req;
  req["preset"] = config_.trainer_preset;
  req["dataset_manifest"] = "dataset/manifest.json";
  req["dataset_manifest_sha256"] = sha256_hex(read_text_file(manifest_path));
  req["train"] = manifest.at("files").at("train");
  req["train"]["path"] = "dataset/train.jsonl";
  req["eval"] = manifest.at("files").at("eval");
  req["eval"]["path"] = "dataset/eval.jsonl";
  req["graph_hash"] = manifest.at("graph_hash");
  req["system_prompt"] = config_.minimal_system_prompt;
  const auto path = output_path("trainer/request.json");
  write_text_file(path, req.dump(2) + "\n");
  return path;
}

std::vector<ScenarioSpec> Pipeline::eval_scenarios(std::size_t n) const {
  return sample_scenarios(schema_, n, derive_seed(config_.seed, kEvalStream));
}

std::vector<Conversation> Pipeline::run(Condition condition, std::size_t n) {
  if (condition == Condition::kGenerated) {
    throw ConfigError("'generated' is not a runtime condition");
  }
  const auto scenarios = eval_scenarios(n);
  RunOptions opts;
  opts.turn_cap = config_.turn_cap;
  opts.simulated_timing = config_.offline();
  UserSimConfig sim;
  sim.persona_template = config_.persona_template;

  // Resolve clients up front; the map is not safe to mutate from workers.
  LlmClient& user = client(kUserSimProvider);
  LlmClient* agent = nullptr;
  LlmClient* router = nullptr;
  LlmClient* compiled = nullptr;
  switch (condition) {
    case Condition::kInContext: agent = &client(kAgentProvider); break;
    case Condition::kSurfaceOrchestrator:
      agent = &client(kAgentProvider);
      router = &client(kRouterProvider);
      break;
    default: compiled = &client(kCompiledProvider); break;
  }

  auto convs = parallel_map(scenarios.size(), config_.jobs, [&](std::size_t i) {
    const auto& sc = scenarios[i];
    switch (condition) {
      case Condition::kInContext: return run_in_context(*graph_, sc, *agent, user, sim, opts);
      case Condition::kSurfaceOrchestrator:
        return run_orchestrated(*graph_, sc, *agent, *router, user, sim, opts);
      default:
        return run_compiled(*compiled, sc, user, sim, config_.minimal_system_prompt, opts);
    }
  });
  save_conversations(store_path(to_string(condition)), convs);
  return convs;
}

std::vector<std::string> Pipeline::judge(std::optional<Condition> only) {
  const auto rubric = load_rubric(config_.rubric_path);
  std::vector<std::string> written;
  const bool secondary = config_.providers.count(std::string(kSecondaryJudgeProvider)) > 0;
  for (auto cond : kRunConditions) {
    if (only && *only != cond) continue;
    const auto store = store_path(to_string(cond));
    if (!fs::exists(store)) continue;
    const auto convs = load_conversations(store);
    const auto cards = score_all(convs, rubric, client(kJudgeProvider), "primary", config_.jobs);
    save_scorecards(cards_path(to_string(cond), "primary"), cards);
    written.push_back(cards_path(to_string(cond), "primary"));
    if (secondary) {
      const auto second =
          score_all(convs, rubric, client(kSecondaryJudgeProvider), "secondary", config_.jobs);
      save_scorecards(cards_path(to_string(cond), "secondary"), second);
      written.push_back(cards_path(to_string(cond), "secondary"));
    }
  }
  return written;
}

std::vector<std::string> Pipeline::stats() {
  Json all = Json::array();
  std::string csv =
      "comparison,criterion,mean_a,mean_b,ci_a_lo,ci_a_hi,ci_b_lo,ci_b_hi,delta,d,p_raw,"
      "p_corrected,stars,test,n_a,n_b\n";
  CompareOptions opts;
  opts.resamples = config_.resamples;
  opts.seed = derive_seed(config_.seed, kStatsStream);
  for (const auto& [a, b] : kComparisons) {
    const auto pa = cards_path(to_string(a), "primary");
    const auto pb = cards_path(to_string(b), "primary");
    if (!fs::exists(pa) || !fs::exists(pb)) continue;
    const auto rows = compare_conditions(load_scorecards(pa), load_scorecards(pb), true, opts);
    const std::string label = std::string(to_string(a)) + "_vs_" + std::string(to_string(b));
    Json entry;
    entry["a"] = std::string(to_string(a));
    entry["b"] = std::string(to_string(b));
    entry["rows"] = Json::array();
    for (const auto& r : rows) entry["rows"].push_back(comparison_to_json(r));
    all.push_back(std::move(entry));
    const auto body = comparisons_to_csv(rows);
    std::size_t pos = body.find('\n') + 1;  // skip header
    while (pos < body.size()) {
      const auto end = body.find('\n', pos);
      csv += label + "," + body.substr(pos, end - pos) + "\n";
      pos = end + 1;
    }
  }
  if (all.empty()) return {};
  Json doc;
  doc["comparisons"] = std::move(all);
  write_text_file(output_path("stats/stats.json"), doc.dump(2) + "\n");
  write_text_file(output_path("stats/stats.csv"), csv);
  return {output_path("stats/stats.json"), output_path("stats/stats.csv")};
}

std::vector<std::string> Pipeline::cost() {
  const auto sheet = load_price_sheet(config_.prices_path);
  std::vector<std::vector<Conversation>> by_condition;
  for (auto cond : kRunConditions) {
    const auto store = store_path(to_string(cond));
    if (fs::exists(store)) by_condition.push_back(load_conversations(store));
  }
  if (by_condition.empty()) return {};
  const auto rows = cost_report(config_.domain, by_condition, sheet);
  write_text_file(output_path("cost/cost.csv"), cost_report_csv(rows));
  return {output_path("cost/cost.csv")};
}

std::vector<std::string> Pipeline::report() {
  std::string md = "# flowc report: " + config_.domain + "\n\n";
  md += "## Procedure\n\n";
  std::size_t hubs = graph_->decision_hubs().size();
  md += "- nodes: " + std::to_string(graph_->nodes().size()) + "\n";
  md += "- edges: " + std::to_string(graph_->edges().size()) + "\n";
  md += "- decision hubs: " + std::to_string(hubs) + "\n";
  md += "- terminals: " + std::to_string(graph_->terminals().size()) + "\n";
  try {
    const auto s = enumerate();
    md += "- acyclic paths: " + std::to_string(s.path_count) + " (" +
          std::to_string(s.min_turns) + "-" + std::to_string(s.max_turns) + " turns)\n";
  } catch (const PathExplosion&) {
    md += "- acyclic paths: more than the enumeration cap\n";
  }
  md += "- graph hash: " + graph_->hash() + "\n\n";

  md += "## Dataset\n\n";
  const auto manifest_path = output_path("dataset/manifest.json");
  if (fs::exists(manifest_path)) {
    const auto m = manifest_from_json(Json::parse(read_text_file(manifest_path)));
    md += "- train: " + std::to_string(m.train_count) + "\n";
    md += "- eval: " + std::to_string(m.eval_count) + "\n";
    md += "- generation losses: " + std::to_string(m.generation_losses) + "\n\n";
  } else {
    md += "missing (run gen-data and export)\n\n";
  }

  md += "## Conditions\n\n";
  std::string csv =
      "condition,conversations,avg_turns,avg_wall_clock_s,avg_words,one_question_fraction,"
      "failure_rate\n";
  std::string table;
  std::vector<std::string> missing;
  for (auto cond : kRunConditions) {
    const auto store = store_path(to_string(cond));
    if (!fs::exists(store)) {
      missing.emplace_back(to_string(cond));
      continue;
    }
    const auto convs = load_conversations(store);
    if (convs.empty()) continue;
    const auto a = analyze_conversations(convs);
    std::string fr = "n/a";
    const auto cards = cards_path(to_string(cond), "primary");
    if (fs::exists(cards)) fr = fmt(failure_rate(load_scorecards(cards)));
    table += "| " + std::string(to_string(cond)) + " | " + std::to_string(a.conversations) +
             " | " + fmt(a.avg_turns, "%.2f") + " | " + fmt(a.avg_wall_clock_s, "%.2f") + " | " +
             fmt(a.avg_words, "%.1f") + " | " + fmt(a.one_question_turn_fraction) + " | " + fr +
             " |\n";
    csv += std::string(to_string(cond)) + "," + std::to_string(a.conversations) + "," +
           fmt(a.avg_turns) + "," + fmt(a.avg_wall_clock_s) + "," + fmt(a.avg_words) + "," +
           fmt(a.one_question_turn_fraction) + "," + fr + "\n";
  }
  if (!table.empty()) {
    md += "| condition | n | avg turns | avg wall clock (s) | avg words | one-question turns | "
          "failure rate |\n|---|---|---|---|---|---|---|\n" +
          table;
  }
  for (const auto& m : missing) md += "\n- " + m + ": missing";
  if (!missing.empty()) md += "\n";
  md += "\n## Comparisons\n\n";
  const auto stats_path = output_path("stats/stats.json");
  if (fs::exists(stats_path)) {
    const auto doc = Json::parse(read_text_file(stats_path));
    for (const auto& c : doc.at("comparisons")) {
      md += "### " + c.at("a").get<std::string>() + " vs " + c.at("b").get<std::string>() + "\n\n";
      md += "| criterion | mean a | mean b | delta | d | p (Holm) |\n|---|---|---|---|---|---|\n";
      for (const auto& r : c.at("rows")) {
        md += "| " + r.at("criterion").get<std::string>() + " | " +
              fmt(r.at("mean_a").get<double>(), "%.2f") + " | " +
              fmt(r.at("mean_b").get<double>(), "%.2f") + " | " +
              fmt(r.at("delta").get<double>(), "%+.2f") + " | " +
              (r.at("d").is_null() ? std::string("n/a") : fmt(r.at("d").get<double>(), "%.2f")) +
              " | " + fmt(r.at("p_corrected").get<double>(), "%.4f") +
              r.at("stars").get<std::string>() + " |\n";
      }
      md += "\n";
    }
  } else {
    md += "missing (run judge and stats)\n\n";
  }
  md += "## Cost per conversation\n\n";
  const auto cost_path = output_path("cost/cost.csv");
  if (fs::exists(cost_path)) {
    md += "```\n" + read_text_file(cost_path) + "```\n";
  } else {
    md += "missing (run cost)\n";
  }
  write_text_file(output_path("report/report.md"), md);
  write_text_file(output_path("report/summary.csv"), csv);
  return {output_path("report/report.md"), output_path("report/summary.csv")};
}

std::vector<StageTiming> Pipeline::recompile(bool dry_run) {
  if (dry_run && !config_.offline()) {
    throw ConfigError("--dry-run requires scripted providers for every role");
  }
  std::vector<StageTiming> stages;
  auto timed = [&](const std::string& name, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail = fn();
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stages.push_back({name, s, std::move(detail)});
  };
  timed("gen-data", [&] {
    const auto b = gen_data();
    return std::to_string(b.conversations.size()) + " conversations, " +
           std::to_string(b.losses.size()) + " losses";
  });
  timed("export", [&] {
    const auto r = export_data();
    return std::to_string(r.train.records) + " train / " + std::to_string(r.eval.records) + " eval";
  });
  timed("trainer-manifest", [&] {
    trainer_request();
    return std::string(dry_run ? "request written, training not launched (dry run)"
                               : "request written for the external trainer");
  });
  timed("spot-check", [&] {
    run(Condition::kSubterranean, config_.spot_check_n);
    run(Condition::kInContext, config_.spot_check_n);
    return std::to_string(config_.spot_check_n) + " scenarios x {subterranean, in_context}";
  });
  timed("judge", [&] { return std::to_string(judge().size()) + " scorecard files"; });
  timed("stats", [&] { return std::to_string(stats().size()) + " files"; });
  timed("cost", [&] { return std::to_string(cost().size()) + " files"; });
  timed("report", [&] { return std::to_string(report().size()) + " files"; });
  return stages;
}

}  // namespace flowc
