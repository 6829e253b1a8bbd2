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

// flowc: validate -> enumerate -> gen-data -> export -> run -> judge -> stats
// -> cost -> report, plus the composite recompile command.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "flowc/flowgraph.hpp"
#include "flowc/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kConfig = 2, kProvider = 3, kValidation = 4 };

int fail(int code, const std::string& kind, const std::string& message,
         flowc::Json extra = flowc::Json::object()) {
  flowc::Json j;
  j["error"] = kind;
  j["message"] = message;
  for (const auto& [k, v] : extra.items()) j[k] = v;
  std::cerr << j.dump() << "\n";
  return code;
}

flowc::Json violations_json(const flowc::ValidationReport& report) {
  flowc::Json arr = flowc::Json::array();
  for (const auto& v : report) {
    arr.push_back({{"code", v.code}, {"element", v.element}, {"message", v.message}});
  }
  return arr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowc: compile conversational procedures into datasets and evaluate them"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::string condition_name;
  bool dry_run = false;
  std::string out_dir;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "pipeline config (JSON)")->required();
    cmd->add_option("--seed", seed, "override the config seed");
    cmd->add_option("--out", out_dir, "override the output directory");
  };

  auto* validate = app.add_subcommand("validate", "check the procedure graph and its templates");
  common(validate);
  auto* enumerate = app.add_subcommand("enumerate", "count acyclic start-to-terminal paths");
  common(enumerate);
  auto* gen = app.add_subcommand("gen-data", "generate synthetic training conversations");
  common(gen);
  gen->add_option("--n", n, "number of conversations");
  auto* exp = app.add_subcommand("export", "split and export the fine-tuning dataset");
  common(exp);
  auto* run = app.add_subcommand("run", "run one runtime condition over paired scenarios");
  common(run);
  run->add_option("--condition", condition_name,
                  "subterranean | surface_orchestrator | in_context")
      ->required();
  run->add_option("--n", n, "number of scenarios");
  auto* judge = app.add_subcommand("judge", "score stored conversations");
  common(judge);
  judge->add_option("--condition", condition_name, "only this condition");
  auto* stats = app.add_subcommand("stats", "paired comparisons of judged conditions");
  common(stats);
  auto* cost = app.add_subcommand("cost", "per-conversation cost report");
  common(cost);
  auto* report = app.add_subcommand("report", "Markdown + CSV summary of existing artifacts");
  common(report);
  auto* recompile =
      app.add_subcommand("recompile", "gen-data, export, trainer request and spot check");
  common(recompile);
  recompile->add_flag("--dry-run", dry_run, "scripted providers only; never launch training");
  recompile->add_option("--n", n, "spot-check scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = flowc::load_pipeline_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    std::optional<flowc::Condition> condition;
    if (!condition_name.empty()) {
      condition = flowc::parse_condition(condition_name);
      if (!condition || *condition == flowc::Condition::kGenerated) {
        return fail(kConfig, "config_error", "unknown condition '" + condition_name + "'");
      }
    }

    if (*validate) {
      const auto doc = flowc::parse_document(flowc::read_text_file(cfg.graph_path));
      auto violations = flowc::validate(doc);
      if (violations.empty()) {
        const flowc::Pipeline p(cfg);
        violations = p.validate();
      }
      if (!violations.empty()) {
        return fail(kValidation, "validation_error",
                    std::to_string(violations.size()) + " violation(s)",
                    {{"violations", violations_json(violations)}});
      }
      std::cout << "ok " << cfg.graph_path << "\n";
      return kOk;
    }

    if (*gen && n) cfg.gen_n = *n;
    if (*run && n) cfg.eval_n = *n;
    if (*recompile && n) cfg.spot_check_n = *n;
    flowc::Pipeline p(cfg);

    if (*enumerate) {
      const auto s = p.enumerate();
      std::cout << "path_count=" << s.path_count << "\nmin_turns=" << s.min_turns
                << "\nmax_turns=" << s.max_turns << "\n";
    } else if (*gen) {
      const auto b = p.gen_data();
      std::cout << "generated=" << b.conversations.size() << "\nlosses=" << b.losses.size()
                << "\n";
    } else if (*exp) {
      const auto r = p.export_data();
      std::cout << "train=" << r.train.records << " " << r.train.sha256 << "\neval="
                << r.eval.records << " " << r.eval.sha256 << "\nmanifest=" << r.manifest_path
                << "\n";
    } else if (*run) {
      const auto convs = p.run(*condition, cfg.eval_n);
      std::cout << "conversations=" << convs.size() << "\n";
    } else if (*judge) {
      for (const auto& f : p.judge(condition)) std::cout << f << "\n";
    } else if (*stats) {
      for (const auto& f : p.stats()) std::cout << f << "\n";
    } else if (*cost) {
      for (const auto& f : p.cost()) std::cout << f << "\n";
    } else if (*report) {
      for (const auto& f : p.report()) std::cout << f << "\n";
    } else if (*recompile) {
      std::cout << flowc::format_stage_table(p.recompile(dry_run));
    }
    return kOk;
  } catch (const flowc::GraphError& e) {
    return fail(kValidation, e.code(), e.what(), {{"violations", violations_json(e.violations())}});
  } catch (const flowc::SyntaxError& e) {
    return fail(kValidation, e.code(), e.what(),
                {{"line", e.line()}, {"column", e.column()}, {"pointer", e.pointer()}});
  } catch (const flowc::TransportError& e) {
    return fail(kProvider, e.code(), e.what());
  } catch (const flowc::AuthError& e) {
    return fail(kProvider, e.code(), e.what());
  } catch (const flowc::MalformedResponse& e) {
    return fail(kProvider, e.code(), e.what());
  } catch (const flowc::TransientFailure& e) {
    return fail(kProvider, e.code(), e.what());
  } catch (const flowc::JudgeParseError& e) {
    return fail(kProvider, e.code(), e.what(), {{"raw_reply", e.raw_reply()}});
  } catch (const flowc::Error& e) {
    return fail(kConfig, e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(kInternal, "internal_error", e.what());
  }
}
