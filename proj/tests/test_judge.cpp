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

#include "doctest.h"
#include "flowc/judge.hpp"
#include "support.hpp"

using namespace flowc;

namespace {

const char* kReply =
    "TaskSuccess: 4\nInformationAccuracy: 5\nConsistency: 3\nGracefulHandling: 2\n"
    "Naturalness: 5\nChallenges: yes\nRationale: Clear and polite.";

Conversation sample_conv(Condition c = Condition::kSubterranean) {
  Conversation conv;
  conv.condition = c;
  conv.scenario_id = 12;
  conv.turns = {{Speaker::kAgent, "Hi, where would you like to go?"},
                {Speaker::kUser, "Kyoto in May."},
                {Speaker::kAgent, "Booked. Enjoy! <END_OF_CONVERSATION>"}};
  return conv;
}

Scorecard card(std::int64_t id, int task, int graceful = 4) {
  Scorecard c;
  c.scenario_id = id;
  c.scores = {task, 4, 4, graceful, 4};
  return c;
}

std::vector<Scorecard> with_failures(std::size_t failures, std::size_t total) {
  std::vector<Scorecard> out;
  for (std::size_t i = 0; i < total; ++i)
    out.push_back(card(static_cast<std::int64_t>(i), i < failures ? 3 : 4));
  return out;
}

}  // namespace

TEST_CASE("criterion names") {
  CHECK(criterion_name(Criterion::kGracefulHandling) == "Graceful Handling");
  CHECK(criterion_key(Criterion::kGracefulHandling) == "GracefulHandling");
  CHECK(parse_criterion("information accuracy") == Criterion::kInformationAccuracy);
  CHECK(parse_criterion("Naturalness") == Criterion::kNaturalness);
  CHECK_FALSE(parse_criterion("Charm").has_value());
}

TEST_CASE("rubric") {
  const auto r = load_rubric(testing::fixture("rubric.json"));
  CHECK(r.graceful_cap_without_challenges);
  for (std::size_t i = 0; i < kCriterionCount; ++i) {
    CHECK(r.criteria[i].criterion == kAllCriteria[i]);
    for (const auto& a : r.criteria[i].anchors) CHECK_FALSE(a.empty());
  }
  CHECK_THROWS_AS(parse_rubric("{}"), RubricError);
  CHECK_THROWS_AS(parse_rubric("[1,2"), RubricError);
}

TEST_CASE("reply parsing") {
  const auto r = parse_judge_reply(kReply);
  CHECK(r.scores == std::array<int, 5>{4, 5, 3, 2, 5});
  CHECK(r.challenges);
  CHECK(r.rationale == "Clear and polite.");

  const auto spaced = parse_judge_reply(
      "task success: 5\nINFORMATION ACCURACY: 4\nConsistency : 4\nGraceful Handling: 5\n"
      "Naturalness: 4\nChallenges: no\nRationale: line one\nline two");
  CHECK(spaced.scores[0] == 5);
  CHECK_FALSE(spaced.challenges);
  CHECK(spaced.rationale == "line one\nline two");

  CHECK_THROWS_AS(parse_judge_reply("TaskSuccess: 4"), JudgeParseError);
  CHECK_THROWS_AS(parse_judge_reply(std::string(kReply).replace(12, 1, "7")), JudgeParseError);
}

TEST_CASE("scripted judge scores") {
  const auto rubric = load_rubric(testing::fixture("rubric.json"));
  LlmClient judge(testing::scripted({kReply}));
  const auto c = score_conversation(sample_conv(), rubric, judge);
  CHECK(c.scores == std::array<int, 5>{4, 5, 3, 2, 5});
  CHECK(c.scenario_id == 12);
  CHECK(c.condition == Condition::kSubterranean);
  CHECK(c.judge == "primary");
  CHECK_FALSE(c.cap_applied);
}

TEST_CASE("judge prompts are blind to the condition") {
  const auto rubric = load_rubric(testing::fixture("rubric.json"));
  for (auto cond : {Condition::kSubterranean, Condition::kSurfaceOrchestrator,
                    Condition::kInContext, Condition::kGenerated}) {
    const auto text = flatten(judge_request(sample_conv(cond), rubric));
    for (const auto* label : {"subterranean", "orchestrator", "in_context", "in-context",
                              "compiled", "generated"})
      CHECK(text.find(label) == std::string::npos);
    CHECK(text.find("Kyoto in May.") != std::string::npos);
  }
}

TEST_CASE("graceful cap without challenges") {
  const auto rubric = load_rubric(testing::fixture("rubric.json"));
  LlmClient judge(testing::scripted(
      {"TaskSuccess: 5\nInformationAccuracy: 5\nConsistency: 5\nGracefulHandling: 5\n"
       "Naturalness: 5\nChallenges: no\nRationale: Smooth."}));
  const auto c = score_conversation(sample_conv(), rubric, judge);
  CHECK(c.score(Criterion::kGracefulHandling) == 3);
  CHECK(c.cap_applied);
  CHECK_FALSE(c.challenge_flag);
  CHECK(scorecard_to_json(c)["cap_applied"] == true);
}

TEST_CASE("malformed replies get one retry") {
  const auto rubric = load_rubric(testing::fixture("rubric.json"));
  SUBCASE("recovers") {
    LlmClient judge(testing::scripted({"I think it was fine.", kReply}));
    CHECK(score_conversation(sample_conv(), rubric, judge).scores[0] == 4);
  }
  SUBCASE("gives up") {
    LlmClient judge(testing::scripted({"nope", "still nope"}));
    try {
      (void)score_conversation(sample_conv(), rubric, judge);
      FAIL("expected JudgeParseError");
    } catch (const JudgeParseError& e) {
      CHECK(e.raw_reply() == "still nope");
    }
  }
}

TEST_CASE("score_all is jobs-independent") {
  const auto rubric = load_rubric(testing::fixture("rubric.json"));
  std::vector<Conversation> convs;
  for (int i = 0; i < 12; ++i) {
    auto c = sample_conv();
    c.scenario_id = i;
    c.turns[1].content = "Trip number " + std::to_string(i);
    convs.push_back(c);
  }
  LlmClient a(testing::bundled_provider("judge"));
  LlmClient b(testing::bundled_provider("judge"));
  CHECK(score_all(convs, rubric, a, "primary", 1) == score_all(convs, rubric, b, "primary", 4));
}

TEST_CASE("scorecard JSON and judge join") {
  auto c = card(4, 5);
  c.condition = Condition::kInContext;
  c.rationale = "ok";
  c.judge = "secondary";
  CHECK(scorecard_from_json(scorecard_to_json(c)) == c);
  CHECK(scorecard_to_json(c)["scores"].contains("Task Success"));

  const std::vector<Scorecard> a{card(1, 4), card(2, 5)};
  std::vector<Scorecard> b{card(2, 3), card(1, 2)};
  const auto joined = join_judges(a, b);
  REQUIRE(joined.size() == 2);
  CHECK(joined[0].first.scenario_id == joined[0].second.scenario_id);
  b.pop_back();
  CHECK_THROWS_AS(join_judges(a, b), KeyMismatch);
}

TEST_CASE("failure rates") {
  CHECK(failure_rate(with_failures(11, 200)) == 0.055);
  CHECK(failure_rate(with_failures(48, 200)) == 0.24);
  CHECK(failure_rate(with_failures(34, 200)) == 0.17);
  std::vector<Scorecard> perfect(10, card(0, 5, 5));
  CHECK(failure_rate(perfect) == 0.0);
}

TEST_CASE("criterion ratio") {
  const auto set = with_failures(3, 10);
  CHECK(criterion_ratio(set, set, Criterion::kTaskSuccess) == 1.0);

  std::vector<Scorecard> low, high;
  for (int i = 0; i < 100; ++i) {
    low.push_back(card(i, 4, i < 7 ? 5 : 4));    // mean 4.07
    high.push_back(card(i, 4, i < 96 ? 5 : 4));  // mean 4.96
  }
  CHECK(mean_score(low, Criterion::kGracefulHandling) == doctest::Approx(4.07));
  CHECK(criterion_ratio(low, high, Criterion::kGracefulHandling) ==
        doctest::Approx(0.820).epsilon(0.001));

  std::vector<Scorecard> fours(5, card(0, 4)), fives(5, card(0, 5));
  CHECK(criterion_ratio(fours, fives, Criterion::kTaskSuccess) == doctest::Approx(0.8));
}

TEST_CASE("conversation analytics") {
  Conversation two;
  two.turns = {{Speaker::kAgent, "Where to? When?"}, {Speaker::kUser, "Rome."}};
  const auto a = analyze_conversations({two});
  CHECK(a.one_question_turn_fraction == 0.0);
  CHECK(a.avg_turns == 2);

  Conversation ten;
  ten.turns = {{Speaker::kAgent, "one two three four five"},
               {Speaker::kUser, "six seven eight nine ten <END_OF_CONVERSATION>"}};
  CHECK(analyze_conversations({ten}).avg_words == 10);

  // Hand-counted batch: 7 agent turns, 2 with exactly one question mark;
  // 7 + 5 = 12 turns, 20 + 17 = 37 words, wall clock 3 s and 5 s.
  Conversation c1, c2;
  c1.wall_clock_s = 3;
  c1.turns = {{Speaker::kAgent, "Hello there. Where would you like to go?"},
              {Speaker::kUser, "Lisbon."},
              {Speaker::kAgent, "Great."},
              {Speaker::kUser, "Thanks."},
              {Speaker::kAgent, "Dates? Budget?"},
              {Speaker::kUser, "May, two thousand."},
              {Speaker::kAgent, "Booked, see you soon. <END_OF_CONVERSATION>"}};
  c2.wall_clock_s = 5;
  c2.turns = {{Speaker::kAgent, "Hi! How can I help today?"},
              {Speaker::kUser, "My audio is broken."},
              {Speaker::kAgent, "Try restarting."},
              {Speaker::kUser, "Works now."},
              {Speaker::kAgent, "Glad to hear. <END_OF_CONVERSATION>"}};
  const auto b = analyze_conversations({c1, c2});
  CHECK(b.conversations == 2);
  CHECK(b.avg_turns == 6);
  CHECK(b.avg_wall_clock_s == 4);
  CHECK(b.avg_words == 18.5);
  CHECK(b.one_question_turn_fraction == doctest::Approx(2.0 / 7.0));
  CHECK(word_count("  a  b\tc\n") == 3);
  CHECK(question_marks("a? b? c") == 2);
}
