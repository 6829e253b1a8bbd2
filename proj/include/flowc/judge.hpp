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

#include <array>
#include <string>
#include <vector>

#include "flowc/conversation.hpp"
#include "flowc/llmgate.hpp"

namespace flowc {

enum class Criterion {
  kTaskSuccess,
  kInformationAccuracy,
  kConsistency,
  kGracefulHandling,
  kNaturalness,
};

inline constexpr std::size_t kCriterionCount = 5;
inline constexpr std::array<Criterion, kCriterionCount> kAllCriteria = {
    Criterion::kTaskSuccess, Criterion::kInformationAccuracy, Criterion::kConsistency,
    Criterion::kGracefulHandling, Criterion::kNaturalness};

/// "Task Success", "Information Accuracy", ...
std::string_view criterion_name(Criterion c);
/// Reply-block key: "TaskSuccess", "InformationAccuracy", ...
std::string_view criterion_key(Criterion c);
std::optional<Criterion> parse_criterion(std::string_view name_or_key);

struct RubricCriterion {
  Criterion criterion = Criterion::kTaskSuccess;
  std::array<std::string, 5> anchors;  // levels 1..5
};

struct Rubric {
  std::array<RubricCriterion, kCriterionCount> criteria;
  bool graceful_cap_without_challenges = true;
};

class RubricError : public Error {
 public:
  explicit RubricError(const std::string& message) : Error("rubric_error", message) {}
};

/// `{"criteria":[{"name","anchors":{"1".."5"}}x5],"special_rules":{...}}`.
/// Criteria must appear once each in canonical order.
Rubric parse_rubric(std::string_view text);
Rubric load_rubric(const std::string& path);

class JudgeParseError : public Error {
 public:
  JudgeParseError(const std::string& message, std::string raw)
      : Error("judge_parse_error", message), raw_(std::move(raw)) {}
  const std::string& raw_reply() const { return raw_; }

 private:
  std::string raw_;
};

class KeyMismatch : public Error {
 public:
  explicit KeyMismatch(const std::string& message) : Error("key_mismatch", message) {}
};

struct Scorecard {
  std::int64_t scenario_id = 0;
  Condition condition = Condition::kSubterranean;
  std::string judge;
  std::array<int, kCriterionCount> scores{};  // indexed by Criterion
  std::string rationale;
  bool challenge_flag = true;
  bool cap_applied = false;

  int score(Criterion c) const { return scores[static_cast<std::size_t>(c)]; }
  friend bool operator==(const Scorecard&, const Scorecard&) = default;
};

struct JudgeReply {
  std::array<int, kCriterionCount> scores{};
  bool challenges = true;
  std::string rationale;
};

/// Parses the labeled reply block (`TaskSuccess: 4`, ..., `Challenges: yes`,
/// `Rationale: ...`). Throws JudgeParseError.
JudgeReply parse_judge_reply(std::string_view reply);

/// Judge prompt. Carries the rubric and a role-labeled transcript only.
ChatRequest judge_request(const Conversation& conv, const Rubric& rubric);

/// Scores one conversation. An unparseable reply is retried once. When the
/// judge reports no challenges and the rubric caps graceful handling, a
/// Graceful Handling score above 3 is lowered to 3 and cap_applied is set.
Scorecard score_conversation(const Conversation& conv, const Rubric& rubric, LlmClient& judge_llm,
                             const std::string& judge_label = "primary");

std::vector<Scorecard> score_all(const std::vector<Conversation>& convs, const Rubric& rubric,
                                 LlmClient& judge_llm, const std::string& judge_label,
                                 int jobs = 1);

Json scorecard_to_json(const Scorecard& card);
Scorecard scorecard_from_json(const Json& j);
std::vector<Scorecard> load_scorecards(const std::string& path);
void save_scorecards(const std::string& path, const std::vector<Scorecard>& cards);

/// Pairs cards from two judges by (scenario_id, condition). Throws
/// KeyMismatch unless the key sets are equal and unique.
std::vector<std::pair<Scorecard, Scorecard>> join_judges(const std::vector<Scorecard>& a,
                                                         const std::vector<Scorecard>& b);

/// Fraction of cards with Task Success <= 3.
double failure_rate(const std::vector<Scorecard>& cards);

double mean_score(const std::vector<Scorecard>& cards, Criterion c);

/// mean_a / mean_b on one criterion.
double criterion_ratio(const std::vector<Scorecard>& a, const std::vector<Scorecard>& b,
                       Criterion c);

struct Analytics {
  double avg_turns = 0;
  double avg_wall_clock_s = 0;
  double avg_words = 0;  // words per conversation, all speakers
  double one_question_turn_fraction = 0;  // over agent turns
  std::size_t conversations = 0;
};

std::size_t word_count(std::string_view text);
std::size_t question_marks(std::string_view text);

Analytics analyze_conversations(const std::vector<Conversation>& convs);

}  // namespace flowc
