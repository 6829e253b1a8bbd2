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

#include "flowc/judge.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

#include "flowc/parallel.hpp"

namespace flowc {
namespace {

constexpr std::array<std::string_view, kCriterionCount> kNames = {
    "Task Success", "Information Accuracy", "Consistency", "Graceful Handling", "Naturalness"};
constexpr std::array<std::string_view, kCriterionCount> kKeys = {
    "TaskSuccess", "InformationAccuracy", "Consistency", "GracefulHandling", "Naturalness"};

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c)) && c != '_' && c != '*') {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view criterion_name(Criterion c) { return kNames[static_cast<std::size_t>(c)]; }
std::string_view criterion_key(Criterion c) { return kKeys[static_cast<std::size_t>(c)]; }

std::optional<Criterion> parse_criterion(std::string_view name_or_key) {
  const auto s = squash(name_or_key);
  for (auto c : kAllCriteria) {
    if (s == squash(criterion_key(c))) return c;
  }
  return std::nullopt;
}

Rubric parse_rubric(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw RubricError(std::string("rubric is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("criteria") || !j["criteria"].is_array()) {
    throw RubricError("rubric needs a 'criteria' array");
  }
  const auto& crit = j["criteria"];
  if (crit.size() != kCriterionCount) {
    throw RubricError("rubric must define exactly 5 criteria, got " + std::to_string(crit.size()));
  }
  Rubric r;
  for (std::size_t i = 0; i < kCriterionCount; ++i) {
    const auto& c = crit[i];
    const auto name = c.value("name", std::string());
    if (name != criterion_name(kAllCriteria[i])) {
      throw RubricError("criterion " + std::to_string(i + 1) + " must be '" +
                        std::string(criterion_name(kAllCriteria[i])) + "', got '" + name + "'");
    }
    r.criteria[i].criterion = kAllCriteria[i];
    if (!c.contains("anchors") || !c["anchors"].is_object()) {
      throw RubricError("criterion '" + name + "' needs an 'anchors' object");
    }
    for (int level = 1; level <= 5; ++level) {
      const auto key = std::to_string(level);
      if (!c["anchors"].contains(key) || !c["anchors"][key].is_string()) {
        throw RubricError("criterion '" + name + "' lacks anchor for level " + key);
      }
      r.criteria[i].anchors[static_cast<std::size_t>(level - 1)] =
          c["anchors"][key].get<std::string>();
    }
  }
  if (j.contains("special_rules")) {
    r.graceful_cap_without_challenges =
        j["special_rules"].value("graceful_cap_without_challenges", true);
  }
  return r;
}

Rubric load_rubric(const std::string& path) { return parse_rubric(read_text_file(path)); }

JudgeReply parse_judge_reply(std::string_view reply) {
  JudgeReply out;
  std::array<bool, kCriterionCount> seen{};
  bool challenges_seen = false;
  bool in_rationale = false;

  std::size_t start = 0;
  while (start <= reply.size()) {
    auto end = reply.find('\n', start);
    if (end == std::string_view::npos) end = reply.size();
    const auto line = reply.substr(start, end - start);
    start = end + 1;

    const auto colon = line.find(':');
    const auto key = colon == std::string_view::npos ? std::string() : squash(line.substr(0, colon));
    if (in_rationale && colon == std::string_view::npos) {
      out.rationale += "\n";
      out.rationale += line;
      continue;
    }
    if (colon == std::string_view::npos) continue;
    const auto value = trim(line.substr(colon + 1));

    if (key == "rationale") {
      in_rationale = true;
      out.rationale = std::string(value);
      continue;
    }
    if (key == "challenges") {
      const auto v = squash(value.substr(0, value.find_first_of(" .,;")));
      if (v == "yes") out.challenges = true;
      else if (v == "no") out.challenges = false;
      else throw JudgeParseError("Challenges must be yes or no", std::string(reply));
      challenges_seen = true;
      continue;
    }
    if (auto c = parse_criterion(key)) {
      const auto digit = value.find_first_of("0123456789");
      if (digit == std::string_view::npos) {
        throw JudgeParseError("no score for " + std::string(criterion_key(*c)), std::string(reply));
      }
      std::size_t k = digit;
      int v = 0;
      while (k < value.size() && std::isdigit(static_cast<unsigned char>(value[k])) && v < 100) {
        v = v * 10 + (value[k++] - '0');
      }
      if (v < 1 || v > 5) {
        throw JudgeParseError(std::string(criterion_key(*c)) + " out of range: " + std::to_string(v),
                              std::string(reply));
      }
      out.scores[static_cast<std::size_t>(*c)] = v;
      seen[static_cast<std::size_t>(*c)] = true;
      in_rationale = false;
    }
  }
  for (auto c : kAllCriteria) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw JudgeParseError("missing " + std::string(criterion_key(c)), std::string(reply));
    }
  }
  if (!challenges_seen) throw JudgeParseError("missing Challenges", std::string(reply));
  out.rationale = std::string(trim(out.rationale));
  return out;
}

ChatRequest judge_request(const Conversation& conv, const Rubric& rubric) {
  std::string system =
      "You evaluate customer service conversations. Score the agent on each criterion "
      "from 1 to 5 using the anchors below.\n";
  for (const auto& rc : rubric.criteria) {
    system += "\n";
    system += criterion_name(rc.criterion);
    system += "\n";
    for (std::size_t level = 0; level < 5; ++level) {
      system += "  " + std::to_string(level + 1) + ": " + rc.anchors[level] + "\n";
    }
  }
  if (rubric.graceful_cap_without_challenges) {
    system +=
        "\nGraceful Handling cannot exceed 3 when the customer raised no difficulties "
        "(changes of mind, complaints, off-topic or ambiguous requests).\n";
  }
  system += "\nReply in exactly this format:\n";
  for (auto c : kAllCriteria) {
    system += std::string(criterion_key(c)) + ": <1-5>\n";
  }
  system += "Challenges: <yes|no>\nRationale: <one short paragraph>";

  ChatRequest req;
  req.messages.push_back({ChatRole::kSystem, std::move(system)});
  req.messages.push_back({ChatRole::kUser, "Transcript:\n" + render_transcript(conv.turns)});
  req.temperature = 0.0;
  req.max_output_tokens = 400;
  req.tag = "judge";
  return req;
}

Scorecard score_conversation(const Conversation& conv, const Rubric& rubric, LlmClient& judge_llm,
                             const std::string& judge_label) {
  if (conv.turns.empty()) throw std::invalid_argument("cannot score an empty conversation");
  const auto req = judge_request(conv, rubric);
  std::optional<JudgeReply> parsed;
  std::string last_raw;
  for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
    const auto resp = judge_llm.complete(req);
    last_raw = resp.content;
    try {
      parsed = parse_judge_reply(resp.content);
    } catch (const JudgeParseError&) {
      if (attempt == 1) throw;
    }
  }

  Scorecard card;
  card.scenario_id = conv.scenario_id;
  card.condition = conv.condition;
  card.judge = judge_label;
  card.scores = parsed->scores;
  card.rationale = parsed->rationale;
  card.challenge_flag = parsed->challenges;
  auto& graceful = card.scores[static_cast<std::size_t>(Criterion::kGracefulHandling)];
  if (rubric.graceful_cap_without_challenges && !card.challenge_flag && graceful > 3) {
    graceful = 3;
    card.cap_applied = true;
  }
  return card;
}

std::vector<Scorecard> score_all(const std::vector<Conversation>& convs, const Rubric& rubric,
                                 LlmClient& judge_llm, const std::string& judge_label, int jobs) {
  return parallel_map(convs.size(), jobs, [&](std::size_t i) {
    return score_conversation(convs[i], rubric, judge_llm, judge_label);
  });
}

Json scorecard_to_json(const Scorecard& card) {
  Json scores;
  for (auto c : kAllCriteria) scores[std::string(criterion_name(c))] = card.score(c);
  Json j;
  j["scenario_id"] = card.scenario_id;
  j["condition"] = std::string(to_string(card.condition));
  j["judge"] = card.judge;
  j["scores"] = std::move(scores);
  j["challenge_flag"] = card.challenge_flag;
  j["cap_applied"] = card.cap_applied;
  j["rationale"] = card.rationale;
  return j;
}

Scorecard scorecard_from_json(const Json& j) {
  Scorecard card;
  card.scenario_id = j.at("scenario_id").get<std::int64_t>();
  const auto cond = parse_condition(j.at("condition").get<std::string>());
  if (!cond) throw ConfigError("unknown condition in scorecard");
  card.condition = *cond;
  card.judge = j.value("judge", std::string());
  for (auto c : kAllCriteria) {
    card.scores[static_cast<std::size_t>(c)] =
        j.at("scores").at(std::string(criterion_name(c))).get<int>();
  }
  card.challenge_flag = j.value("challenge_flag", true);
  card.cap_applied = j.value("cap_applied", false);
  card.rationale = j.value("rationale", std::string());
  return card;
}

std::vector<Scorecard> load_scorecards(const std::string& path) {
  std::vector<Scorecard> out;
  for (const auto& j : read_jsonl(path)) out.push_back(scorecard_from_json(j));
  return out;
}

void save_scorecards(const std::string& path, const std::vector<Scorecard>& cards) {
  std::vector<Json> lines;
  lines.reserve(cards.size());
  for (const auto& c : cards) lines.push_back(scorecard_to_json(c));
  write_text_file(path, to_jsonl(lines));
}

std::vector<std::pair<Scorecard, Scorecard>> join_judges(const std::vector<Scorecard>& a,
                                                         const std::vector<Scorecard>& b) {
  using Key = std::pair<std::int64_t, int>;
  const auto key = [](const Scorecard& c) { return Key{c.scenario_id, static_cast<int>(c.condition)}; };
  std::map<Key, const Scorecard*> index;
  for (const auto& c : b) {
    if (!index.emplace(key(c), &c).second) throw KeyMismatch("duplicate key in second card set");
  }
  if (a.size() != b.size()) throw KeyMismatch("card sets differ in size");
  std::vector<std::pair<Scorecard, Scorecard>> out;
  std::map<Key, bool> used;
  for (const auto& c : a) {
    const auto it = index.find(key(c));
    if (it == index.end()) {
      throw KeyMismatch("scenario " + std::to_string(c.scenario_id) + " missing from second set");
    }
    if (used[key(c)]) throw KeyMismatch("duplicate key in first card set");
    used[key(c)] = true;
    out.emplace_back(c, *it->second);
  }
  return out;
}

double failure_rate(const std::vector<Scorecard>& cards) {
  if (cards.empty()) throw std::invalid_argument("failure_rate of an empty set");
  const auto failures = std::count_if(cards.begin(), cards.end(), [](const Scorecard& c) {
    return c.score(Criterion::kTaskSuccess) <= 3;
  });
  return static_cast<double>(failures) / static_cast<double>(cards.size());
}

double mean_score(const std::vector<Scorecard>& cards, Criterion c) {
  if (cards.empty()) throw std::invalid_argument("mean of an empty card set");
  double sum = 0;
  for (const auto& card : cards) sum += card.score(c);
  return sum / static_cast<double>(cards.size());
}

double criterion_ratio(const std::vector<Scorecard>& a, const std::vector<Scorecard>& b,
                       Criterion c) {
  return mean_score(a, c) / mean_score(b, c);
}

std::size_t word_count(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (char ch : text) {
    const bool space = std::isspace(static_cast<unsigned char>(ch));
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

std::size_t question_marks(std::string_view text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '?'));
}

Analytics analyze_conversations(const std::vector<Conversation>& convs) {
  if (convs.empty()) throw std::invalid_argument("analyze_conversations needs conversations");
  Analytics a;
  a.conversations = convs.size();
  double turns = 0, wall = 0, words = 0;
  std::size_t agent_turns = 0, one_q = 0;
  for (const auto& c : convs) {
    turns += static_cast<double>(c.turns.size());
    wall += c.wall_clock_s;
    for (const auto& t : c.turns) {
      const auto text = strip_end_marker(t.content);
      words += static_cast<double>(word_count(text));
      if (t.role == Speaker::kAgent) {
        ++agent_turns;
        if (question_marks(text) == 1) ++one_q;
      }
    }
  }
  const auto n = static_cast<double>(convs.size());
  a.avg_turns = turns / n;
  a.avg_wall_clock_s = wall / n;
  a.avg_words = words / n;
  a.one_question_turn_fraction =
      agent_turns == 0 ? 0.0 : static_cast<double>(one_q) / static_cast<double>(agent_turns);
  return a;
}

}  // namespace flowc
