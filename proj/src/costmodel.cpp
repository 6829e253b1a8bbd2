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

#include "flowc/costmodel.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace flowc {
namespace {

std::string fmt(double v, const char* spec = "%.10g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

void PriceSheet::check() const {
  if (!(api_input_per_mtok > 0) || !(api_output_per_mtok > 0)) {
    throw ConfigError("API prices must be positive");
  }
  if (!(gpu_hourly >= 0)) throw ConfigError("gpu_hourly must be nonnegative");
  if (!(prefill_tps > 0) || !(decode_tps > 0)) throw ConfigError("throughputs must be positive");
}

PriceSheet parse_price_sheet(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("price sheet is not valid JSON: ") + e.what());
  }
  PriceSheet s;
  try {
    s.api_input_per_mtok = j.at("api_input_per_mtok").get<double>();
    s.api_output_per_mtok = j.at("api_output_per_mtok").get<double>();
    s.gpu_hourly = j.at("gpu_hourly").get<double>();
    s.prefill_tps = j.at("prefill_tps").get<double>();
    s.decode_tps = j.at("decode_tps").get<double>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("price sheet: ") + e.what());
  }
  s.check();
  return s;
}

PriceSheet load_price_sheet(const std::string& path) {
  return parse_price_sheet(read_text_file(path));
}

Rates api_rates(const PriceSheet& sheet) {
  return {sheet.api_input_per_mtok, sheet.api_output_per_mtok};
}

Rates self_host_rates(const PriceSheet& sheet) {
  if (!(sheet.prefill_tps > 0) || !(sheet.decode_tps > 0)) {
    throw std::invalid_argument("throughputs must be positive");
  }
  return {sheet.gpu_hourly / (sheet.prefill_tps * 3600.0) * 1e6,
          sheet.gpu_hourly / (sheet.decode_tps * 3600.0) * 1e6};
}

TokenRatio per_token_ratio(const PriceSheet& sheet) {
  const auto self = self_host_rates(sheet);
  TokenRatio r;
  r.input = sheet.api_input_per_mtok / self.input_per_mtok;
  r.output = sheet.api_output_per_mtok / self.output_per_mtok;
  r.mean = (r.input + r.output) / 2.0;
  return r;
}

double conversation_cost(const TokenVolume& volume, const Rates& rates) {
  if (rates.input_per_mtok < 0 || rates.output_per_mtok < 0) {
    throw std::invalid_argument("rates must be nonnegative");
  }
  return (volume.input_tokens * rates.input_per_mtok + volume.output_tokens * rates.output_per_mtok) /
         1e6;
}

std::int64_t breakeven(double one_time_usd, double per_conv_saving_usd) {
  if (!(per_conv_saving_usd > 0)) throw NonPositiveSaving(per_conv_saving_usd);
  if (one_time_usd < 0) throw std::invalid_argument("one-time cost must be nonnegative");
  return static_cast<std::int64_t>(std::ceil(one_time_usd / per_conv_saving_usd));
}

double amortized_cost(double one_time_usd, std::int64_t n_conversations, double per_conv_usd) {
  if (n_conversations < 1) throw std::invalid_argument("n_conversations must be at least 1");
  return one_time_usd / static_cast<double>(n_conversations) + per_conv_usd;
}

RatioBounds printed_ratio_bounds(double a, int decimals_a, double b, int decimals_b) {
  const double ha = 0.5 * std::pow(10.0, -decimals_a);
  const double hb = 0.5 * std::pow(10.0, -decimals_b);
  if (!(b - hb > 0)) throw std::invalid_argument("denominator may round to zero");
  return {(a - ha) / (b + hb), (a + ha) / (b - hb)};
}

TokenVolume conversation_volume(const Conversation& conv) {
  TokenVolume v;
  for (const auto& t : conv.turns) {
    if (t.role != Speaker::kAgent) continue;
    v.input_tokens += static_cast<double>(t.input_tokens);
    v.output_tokens += static_cast<double>(t.output_tokens);
  }
  v.input_tokens += static_cast<double>(conv.routing_input_tokens);
  v.output_tokens += static_cast<double>(conv.routing_output_tokens);
  return v;
}

TokenVolume mean_volume(const std::vector<Conversation>& convs) {
  if (convs.empty()) throw std::invalid_argument("mean_volume needs conversations");
  TokenVolume sum;
  for (const auto& c : convs) {
    const auto v = conversation_volume(c);
    sum.input_tokens += v.input_tokens;
    sum.output_tokens += v.output_tokens;
  }
  const auto n = static_cast<double>(convs.size());
  return {sum.input_tokens / n, sum.output_tokens / n};
}

std::vector<CostRow> cost_report(const std::string& domain,
                                 const std::vector<std::vector<Conversation>>& by_condition,
                                 const PriceSheet& sheet) {
  std::vector<CostRow> rows;
  for (const auto& convs : by_condition) {
    if (convs.empty()) continue;
    CostRow row;
    row.domain = domain;
    row.condition = convs.front().condition;
    row.volume = mean_volume(convs);
    const auto rates =
        row.condition == Condition::kSubterranean ? self_host_rates(sheet) : api_rates(sheet);
    row.usd = conversation_cost(row.volume, rates);
    rows.push_back(row);
  }
  double in_context_usd = 0;
  for (const auto& r : rows) {
    if (r.condition == Condition::kInContext) in_context_usd = r.usd;
  }
  for (auto& r : rows) {
    r.ratio_vs_in_context = (in_context_usd > 0 && r.usd > 0) ? in_context_usd / r.usd : 0.0;
  }
  return rows;
}

std::string cost_report_csv(const std::vector<CostRow>& rows) {
  std::string out = "domain,condition,in_tokens,out_tokens,usd,ratio_vs_in_context\n";
  for (const auto& r : rows) {
    out += r.domain + "," + std::string(to_string(r.condition)) + "," +
           fmt(r.volume.input_tokens, "%.2f") + "," + fmt(r.volume.output_tokens, "%.2f") + "," +
           fmt(r.usd, "%.8f") + "," + fmt(r.ratio_vs_in_context, "%.2f") + "\n";
  }
  return out;
}

}  // namespace flowc
