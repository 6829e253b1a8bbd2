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

// Acceptance run: one PASS/FAIL line per primary criterion. Exit status is
// nonzero when any line fails. Tolerances are fixed below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "flowc/convgen.hpp"
#include "flowc/costmodel.hpp"
#include "flowc/judge.hpp"
#include "flowc/pathkit.hpp"
#include "flowc/pipeline.hpp"
#include "flowc/runtime.hpp"
#include "flowc/stats.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace flowc;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kDagCases = 200;
constexpr std::size_t kMaxDagNodes = 12;
constexpr double kPathBudgetS = 10.0;
constexpr std::size_t kRankCases = 500;
constexpr std::size_t kMaxRankN = 10;
constexpr double kRankTol = 1e-9;
constexpr std::size_t kCohenCases = 100;
constexpr double kCohenTol = 1e-12;
constexpr double kRateTol = 1e-4;
constexpr double kRatioTol = 0.1;
constexpr double kPrintedRatioTol = 0.10;
constexpr double kRecompileBudgetS = 60.0;
constexpr std::size_t kAuditConversations = 200;

struct Verdict {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Verdict path_oracle() {
  const auto t0 = Clock::now();
  SplitMix64 rng(0xACCE97);
  std::size_t matched = 0;
  for (std::size_t i = 0; i < kDagCases; ++i) {
    const auto doc = oracle::random_dag(rng, 2 + rng.below(kMaxDagNodes - 1));
    std::set<std::vector<std::string>> got;
    for (const auto& p : enumerate_acyclic_paths(ProcedureGraph::from_document(doc)))
      got.insert(p.node_ids);
    if (got == oracle::brute_force_paths(doc)) ++matched;
  }
  const double s = seconds_since(t0);
  return {matched == kDagCases && s < kPathBudgetS,
          std::to_string(matched) + "/" + std::to_string(kDagCases) + " DAGs match, " +
              fmt("%.2f s", s)};
}

std::vector<double> sample(SplitMix64& rng, std::size_t n, bool likert) {
  std::vector<double> v(n);
  for (auto& x : v)
    x = likert ? static_cast<double>(1 + rng.below(5)) : std::round(rng.uniform() * 1000) / 10;
  return v;
}

Verdict stats_oracle() {
  SplitMix64 rng(0x57A75);
  double w_err = 0, u_err = 0, d_err = 0;
  for (std::size_t i = 0; i < kRankCases; ++i) {
    const std::size_t n = 1 + rng.below(kMaxRankN);
    const auto a = sample(rng, n, i % 2 == 0), b = sample(rng, n, i % 2 == 0);
    w_err = std::max(w_err, std::fabs(wilcoxon_signed_rank(a, b).p - oracle::wilcoxon_exact_p(a, b)));
  }
  for (std::size_t i = 0; i < kRankCases; ++i) {
    const auto a = sample(rng, 1 + rng.below(kMaxRankN), i % 2 == 1);
    const auto b = sample(rng, 1 + rng.below(kMaxRankN), i % 2 == 1);
    u_err = std::max(u_err, std::fabs(mann_whitney_u(a, b).p - oracle::mann_whitney_exact_p(a, b)));
  }
  for (std::size_t i = 0; i < kCohenCases; ++i) {
    const auto a = sample(rng, 2 + rng.below(20), false);
    const auto b = sample(rng, 2 + rng.below(20), false);
    d_err = std::max(d_err, std::fabs(cohens_d(a, b) - oracle::cohens_d_hand(a, b)));
  }
  return {w_err <= kRankTol && u_err <= kRankTol && d_err <= kCohenTol,
          "max |dp| wilcoxon " + fmt("%.1e", w_err) + ", mann-whitney " + fmt("%.1e", u_err) +
              ", max |dd| " + fmt("%.1e", d_err)};
}

Verdict holm() {
  SplitMix64 rng(0x4017);
  bool ok = true;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> p(5);
    for (auto& x : p) x = rng.uniform();
    const auto h = holm_bonferroni(p);
    std::vector<std::size_t> order{0, 1, 2, 3, 4};
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return p[x] < p[y]; });
    for (std::size_t k = 0; k < 5; ++k) {
      ok = ok && h[k] >= p[k] && h[k] <= 1.0;
      if (k > 0) ok = ok && h[order[k]] >= h[order[k - 1]];
    }
  }
  const auto e1 = holm_bonferroni({0.01, 1, 1, 1, 1});
  const auto e2 = holm_bonferroni({0.05, 0.05, 0.05, 0.05, 0.05});
  bool examples = e1[0] == 0.01 * 5 && e1[1] == 1.0;
  for (double x : e2) examples = examples && x == 0.05 * 5;
  return {ok && examples, std::string("dominance and monotonicity over 1000 vectors ") +
                              (ok ? "hold" : "violated") + ", examples " +
                              (examples ? "match" : "differ")};
}

Verdict bootstrap() {
  const std::vector<double> s{3, 4, 4, 5, 2, 5, 4, 3, 5, 1};
  const auto a = bootstrap_ci_mean(s, kDefaultResamples, 42);
  const auto b = bootstrap_ci_mean(s, kDefaultResamples, 42);
  const auto c = bootstrap_ci_mean({4, 4, 4}, kDefaultResamples, 7);
  const bool ok = a == b && c.lo == 4 && c.hi == 4;
  return {ok, "CI [" + fmt("%.4f", a.lo) + ", " + fmt("%.4f", a.hi) + "] repeated " +
                  (a == b ? "identically" : "differently") + ", constant sample [" +
                  fmt("%g", c.lo) + ", " + fmt("%g", c.hi) + "]"};
}

Verdict cost_model() {
  const PriceSheet sheet{3.0, 15.0, 2.50, 15000, 3000};
  const auto r = self_host_rates(sheet);
  const auto t = per_token_ratio(sheet);
  const auto bounds = printed_ratio_bounds(0.133, 3, 0.0010, 4);
  const double printed = 0.133 / 0.0010;
  const bool rates = std::fabs(r.input_per_mtok - 0.0463) <= kRateTol &&
                     std::fabs(r.output_per_mtok - 0.2315) <= kRateTol;
  const bool ratio = std::fabs(t.input - 64.8) <= kRatioTol && std::fabs(t.output - 64.8) <= kRatioTol;
  const bool table = bounds.contains(128) && std::fabs(printed - 128) / 128 <= kPrintedRatioTol;
  return {rates && ratio && table,
          "rates (" + fmt("%.4f", r.input_per_mtok) + ", " + fmt("%.4f", r.output_per_mtok) +
              "), ratio " + fmt("%.2f", t.mean) + ", 0.133/0.0010 bounds [" +
              fmt("%.1f", bounds.lo) + ", " + fmt("%.1f", bounds.hi) + "] vs 128"};
}

Verdict break_even() {
  const auto n = breakeven(50, 0.103 - 0.0003);
  const double a = amortized_cost(65, 10000, 0.0007);
  return {n == 487 && n <= 500 && a < 0.01,
          "breakeven " + std::to_string(n) + ", amortized " + fmt("%.4f", a) + " USD"};
}

Verdict failure_rates() {
  auto cards = [](std::size_t failures) {
    std::vector<Scorecard> out(200);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].scenario_id = static_cast<std::int64_t>(i);
      out[i].scores = {i < failures ? 2 : 5, 5, 5, 5, 5};
    }
    return out;
  };
  const double a = failure_rate(cards(11)), b = failure_rate(cards(48)), c = failure_rate(cards(34));
  return {a == 0.055 && b == 0.24 && c == 0.17,
          fmt("%.3f", a) + " " + fmt("%.3f", b) + " " + fmt("%.3f", c)};
}

Verdict bookkeeping() {
  std::vector<Conversation> convs(870);
  for (std::size_t i = 0; i < convs.size(); ++i) {
    convs[i].scenario_id = static_cast<std::int64_t>(i);
    convs[i].turns = {{Speaker::kAgent, "Turn " + std::to_string(i)}};
  }
  const auto ds = build_dataset(convs, 0.9, 1);
  const auto merged = merge_runs(std::vector<Dataset>(8, ds));
  std::set<std::int64_t> distinct;
  for (const auto& c : merged.train) distinct.insert(c.scenario_id);
  const bool ok = ds.train.size() == 783 && ds.eval.size() == 87 &&
                  merged.train.size() == 6264 && distinct.size() == 783;
  return {ok, std::to_string(ds.train.size()) + "/" + std::to_string(ds.eval.size()) +
                  ", merged train " + std::to_string(merged.train.size()) + " (" +
                  std::to_string(distinct.size()) + " distinct)"};
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file())
      out[fs::relative(e.path(), root).string()] = read_text_file(e.path().string());
  return out;
}

Verdict recompile_determinism() {
  const auto t0 = Clock::now();
  std::vector<std::map<std::string, std::string>> trees;
  bool offline = true;
  for (const char* run : {"a", "b"}) {
    auto cfg = load_pipeline_config(testing::fixture("travel/pipeline.json"));
    offline = offline && cfg.offline();
    cfg.output_dir = (fs::temp_directory_path() / "flowc_acceptance" / run).string();
    fs::remove_all(cfg.output_dir);
    Pipeline p(cfg);
    (void)p.recompile(true);
    trees.push_back(tree_contents(cfg.output_dir));
  }
  const double s = seconds_since(t0);
  const std::vector<std::string> required{
      "store/travel.generated.7.convs.jsonl", "store/travel.subterranean.7.convs.jsonl",
      "dataset/train.jsonl",  "dataset/eval.jsonl",  "dataset/manifest.json",
      "judge/travel.subterranean.7.cards.jsonl", "stats/stats.csv", "cost/cost.csv"};
  bool present = true;
  for (const auto& f : required) present = present && trees[0].count(f) == 1;
  const bool same = trees[0] == trees[1];
  return {offline && present && same && s < kRecompileBudgetS,
          std::to_string(trees[0].size()) + " files " + (same ? "byte-identical" : "DIFFER") +
              ", two runs " + fmt("%.2f s", s) + (offline ? ", scripted only" : ", NETWORK")};
}

Verdict audits() {
  const auto g = load_procedure(testing::fixture("travel/graph.json"));
  const auto schema = load_schema(testing::fixture("travel/schema.json"));
  LlmClient gen(testing::bundled_provider("generator"));
  GenerationOptions opts;
  opts.jobs = 4;
  const auto batch = generate_batch(g, schema, kAuditConversations, 2026, gen, opts);

  std::size_t leaks = 0;
  for (const auto& c : batch.conversations)
    for (const auto& t : c.turns) {
      if (t.content.find("{{") != std::string::npos || t.content.find("}}") != std::string::npos)
        ++leaks;
      for (const auto& n : g.nodes())
        if (t.content.find(n.id) != std::string::npos) ++leaks;
    }

  const auto rubric = load_rubric(testing::fixture("rubric.json"));
  LlmClient judge(testing::bundled_provider("judge"));
  judge.set_recording(true);
  for (auto cond : {Condition::kSubterranean, Condition::kSurfaceOrchestrator,
                    Condition::kInContext}) {
    auto convs = batch.conversations;
    for (auto& c : convs) c.condition = cond;
    (void)score_all(convs, rubric, judge, "primary", 4);
  }
  std::size_t labels = 0;
  const auto prompts = judge.recorded();
  for (const auto& r : prompts) {
    const auto text = flatten(r);
    for (const auto* label : {"subterranean", "surface_orchestrator", "orchestrator",
                              "in_context", "in-context", "compiled"})
      if (text.find(label) != std::string::npos) ++labels;
  }
  const bool ok = batch.conversations.size() == kAuditConversations && leaks == 0 && labels == 0;
  return {ok, std::to_string(batch.conversations.size()) + " conversations, " +
                  std::to_string(leaks) + " annotation leaks, " + std::to_string(labels) +
                  " condition labels in " + std::to_string(prompts.size()) + " judge prompts"};
}

Verdict constant_prompt() {
  const auto small = load_procedure(testing::fixture("travel/graph.json"));
  const auto large = load_procedure(testing::fixture("insurance/graph.json"));
  ScenarioSpec s;
  s.scenario_id = 1;
  s.seed = 1;
  s.bindings["persona"] = std::string("decisive");
  const UserSimConfig user_cfg{"A {{persona}} customer.", 256, 0.7};
  const std::vector<std::string> agent_script{"Hello, how can I help?", "Could you tell me more?",
                                              "Here is what I suggest.",
                                              "All set. <END_OF_CONVERSATION>"};
  const std::vector<std::string> user_script{"Hi.", "Sure.", "Sounds good."};

  auto per_call = [](LlmClient& llm) {
    std::vector<std::int64_t> v;
    for (const auto& e : llm.ledger().entries()) v.push_back(e.input_tokens);
    return v;
  };
  // The compiled condition is handed the same scripts whichever fixture the
  // scenario belongs to; only the in-context prompt embeds the graph.
  auto compiled = [&](const ProcedureGraph&) {
    LlmClient agent(testing::scripted(agent_script));
    LlmClient user(testing::scripted(user_script));
    (void)run_compiled(agent, s, user, user_cfg, "You are a helpful assistant.");
    return per_call(agent);
  };
  auto in_context = [&](const ProcedureGraph& g) {
    LlmClient agent(testing::scripted(agent_script));
    LlmClient user(testing::scripted(user_script));
    (void)run_in_context(g, s, agent, user, user_cfg);
    return per_call(agent);
  };
  const auto c14 = compiled(small), c55 = compiled(large);
  const auto i14 = in_context(small), i55 = in_context(large);
  bool larger = i14.size() == i55.size() && !i14.empty();
  for (std::size_t k = 0; larger && k < i14.size(); ++k) larger = i55[k] > i14[k];
  const bool ok = c14 == c55 && !c14.empty() && larger;
  return {ok, "compiled per-call input " + std::string(c14 == c55 ? "identical" : "differs") +
                  " (" + std::to_string(c14.front()) + " tokens first call), in-context first call " +
                  std::to_string(i14.front()) + " vs " + std::to_string(i55.front())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"path-enumeration oracle equivalence", path_oracle},
      {"statistics oracle equivalence", stats_oracle},
      {"holm-bonferroni", holm},
      {"bootstrap determinism", bootstrap},
      {"cost model numerics", cost_model},
      {"break-even", break_even},
      {"failure-rate arithmetic", failure_rates},
      {"dataset bookkeeping", bookkeeping},
      {"end-to-end recompile determinism", recompile_determinism},
      {"blindness and annotation-leak audits", audits},
      {"constant-prompt property", constant_prompt},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
