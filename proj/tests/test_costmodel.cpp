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

#include <cmath>

#include "doctest.h"
#include "flowc/costmodel.hpp"
#include "flowc/runtime.hpp"
#include "support.hpp"

using namespace flowc;

namespace {

PriceSheet reference_sheet() { return {3.0, 15.0, 2.50, 15000, 3000}; }

Conversation conv_with(std::int64_t in, std::int64_t out, Condition c) {
  Conversation conv;
  conv.condition = c;
  Turn t;
  t.role = Speaker::kAgent;
  t.content = "x";
  t.input_tokens = in;
  t.output_tokens = out;
  conv.turns.push_back(t);
  Turn u;
  u.role = Speaker::kUser;
  u.content = "y";
  u.input_tokens = 999;  // user-simulator tokens are not the agent's cost
  conv.turns.push_back(u);
  return conv;
}

}  // namespace

TEST_CASE("self-host rates") {
  const auto r = self_host_rates(reference_sheet());
  CHECK(std::fabs(r.input_per_mtok - 0.0463) <= 1e-4);
  CHECK(std::fabs(r.output_per_mtok - 0.2315) <= 1e-4);
  CHECK(r.input_per_mtok == doctest::Approx(2.5 / 54.0));

  auto free_gpu = reference_sheet();
  free_gpu.gpu_hourly = 0;
  CHECK(self_host_rates(free_gpu).input_per_mtok == 0);
  CHECK(self_host_rates(free_gpu).output_per_mtok == 0);

  auto fast = reference_sheet();
  fast.prefill_tps *= 2;
  fast.decode_tps *= 2;
  CHECK(self_host_rates(fast).input_per_mtok == doctest::Approx(r.input_per_mtok / 2));
  CHECK(self_host_rates(fast).output_per_mtok == doctest::Approx(r.output_per_mtok / 2));
}

TEST_CASE("per-token ratio") {
  const auto t = per_token_ratio(reference_sheet());
  CHECK(std::fabs(t.input - 64.8) <= 0.1);
  CHECK(std::fabs(t.output - 64.8) <= 0.1);
  const auto self = self_host_rates(reference_sheet());
  PriceSheet same = reference_sheet();
  same.api_input_per_mtok = self.input_per_mtok;
  same.api_output_per_mtok = self.output_per_mtok;
  CHECK(per_token_ratio(same).mean == doctest::Approx(1.0));
}

TEST_CASE("conversation cost") {
  CHECK(conversation_cost({0, 0}, api_rates(reference_sheet())) == 0);
  CHECK(conversation_cost({1e6, 1e6}, api_rates(reference_sheet())) == doctest::Approx(18.0));
  CHECK(conversation_cost({2000, 500}, {3, 15}) == doctest::Approx(0.0135));
}

TEST_CASE("printed-cost ratios are consistent within rounding") {
  const auto b = printed_ratio_bounds(0.133, 3, 0.0010, 4);
  CHECK(b.lo < 133);
  CHECK(b.hi > 133);
  CHECK(b.contains(128));
  CHECK(std::fabs(0.133 / 0.0010 - 128) / 128 <= 0.10);
  CHECK_FALSE(printed_ratio_bounds(0.5, 1, 0.5, 1).contains(2));
}

TEST_CASE("break-even and amortization") {
  CHECK(breakeven(50, 0.103 - 0.0003) == 487);
  CHECK(breakeven(80, 0.327 - 0.0007) == 246);
  CHECK(breakeven(0, 0.1) == 0);
  CHECK_THROWS_AS(breakeven(50, 0), NonPositiveSaving);
  CHECK_THROWS_AS(breakeven(50, -0.1), NonPositiveSaving);

  CHECK(amortized_cost(65, 10000, 0.0007) == doctest::Approx(0.0072));
  CHECK(amortized_cost(65, 10000, 0.0007) < 0.01);
  CHECK(amortized_cost(65, 1, 0.0007) == doctest::Approx(65.0007));
  CHECK(amortized_cost(65, 1'000'000'000, 0.0007) == doctest::Approx(0.0007).epsilon(1e-3));
}

TEST_CASE("volumes count agent and routing tokens only") {
  auto c = conv_with(100, 20, Condition::kSurfaceOrchestrator);
  c.routing_input_tokens = 40;
  c.routing_output_tokens = 2;
  const auto v = conversation_volume(c);
  CHECK(v.input_tokens == 140);
  CHECK(v.output_tokens == 22);
  const auto m = mean_volume({conv_with(100, 10, Condition::kInContext),
                              conv_with(300, 30, Condition::kInContext)});
  CHECK(m.input_tokens == 200);
  CHECK(m.output_tokens == 20);
}

TEST_CASE("cost report") {
  const std::vector<std::vector<Conversation>> by_condition{
      {conv_with(1000, 100, Condition::kSubterranean)},
      {conv_with(4000, 100, Condition::kInContext)}};
  const auto rows = cost_report("travel", by_condition, reference_sheet());
  REQUIRE(rows.size() == 2);
  const auto self = self_host_rates(reference_sheet());
  CHECK(rows[0].usd == doctest::Approx((1000 * self.input_per_mtok + 100 * self.output_per_mtok) / 1e6));
  CHECK(rows[1].usd == doctest::Approx((4000 * 3.0 + 100 * 15.0) / 1e6));
  CHECK(rows[1].ratio_vs_in_context == doctest::Approx(1.0));
  CHECK(rows[0].ratio_vs_in_context == doctest::Approx(rows[1].usd / rows[0].usd));
  const auto csv = cost_report_csv(rows);
  CHECK(csv.rfind("domain,condition,in_tokens,out_tokens,usd,ratio_vs_in_context\n", 0) == 0);
}

TEST_CASE("scripted travel volumes: API versus self-host near the declared target") {
  const auto target = Json::parse(read_text_file(testing::fixture("cost_target.json")));
  const double expected = target.at("api_vs_self_host_ratio").get<double>();
  const double tol = target.at("tolerance_fraction").get<double>();
  const auto sheet = load_price_sheet(testing::fixture("prices.json"));

  LlmClient endpoint(testing::bundled_provider("compiled"));
  LlmClient user(testing::bundled_provider("user_sim"));
  std::vector<Conversation> convs;
  for (int i = 0; i < 10; ++i) {
    ScenarioSpec s;
    s.scenario_id = i;
    s.seed = static_cast<std::uint64_t>(i);
    s.bindings["persona"] = std::string("decisive");
    convs.push_back(run_compiled(endpoint, s, user, {"A {{persona}} traveler.", 256, 0.7},
                                 "You are a helpful travel booking assistant."));
  }
  const auto volume = mean_volume(convs);
  CHECK(volume.input_tokens > 0);
  const double ratio = conversation_cost(volume, api_rates(sheet)) /
                       conversation_cost(volume, self_host_rates(sheet));
  CHECK(std::fabs(ratio - expected) / expected <= tol);
}

TEST_CASE("price sheet parsing") {
  CHECK(load_price_sheet(testing::fixture("prices.json")).decode_tps == 3000);
  CHECK_THROWS_AS(parse_price_sheet("{}"), ConfigError);
  CHECK_THROWS_AS(parse_price_sheet("nope"), ConfigError);
  CHECK_THROWS(parse_price_sheet(R"({"api_input_per_mtok":-1,"api_output_per_mtok":1,)"
                                 R"("gpu_hourly":1,"prefill_tps":1,"decode_tps":1})"));
}
