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
#include <string>
#include <vector>

#include "flowc/conversation.hpp"
#include "flowc/error.hpp"
#include "flowc/io.hpp"

namespace flowc {

// Prices in USD per million tokens; throughput in tokens per second.
struct PriceSheet {
  double api_input_per_mtok = 0;
  double api_output_per_mtok = 0;
  double gpu_hourly = 0;
  double prefill_tps = 0;
  double decode_tps = 0;

  /// Throws ConfigError unless prices are positive, gpu_hourly is
  /// nonnegative and throughputs are positive.
  void check() const;
};

PriceSheet parse_price_sheet(std::string_view text);
PriceSheet load_price_sheet(const std::string& path);

struct Rates {
  double input_per_mtok = 0;
  double output_per_mtok = 0;
};

struct TokenVolume {
  double input_tokens = 0;
  double output_tokens = 0;
};

class NonPositiveSaving : public Error {
 public:
  explicit NonPositiveSaving(double saving)
      : Error("non_positive_saving",
              "per-conversation saving must be positive, got " + std::to_string(saving)) {}
};

Rates api_rates(const PriceSheet& sheet);

/// gpu_hourly / (tps * 3600) * 1e6 for prefill (input) and decode (output).
Rates self_host_rates(const PriceSheet& sheet);

struct TokenRatio {
  double input = 0;
  double output = 0;
  double mean = 0;
};

/// API rate divided by self-host rate, per direction.
TokenRatio per_token_ratio(const PriceSheet& sheet);

double conversation_cost(const TokenVolume& volume, const Rates& rates);

/// ceil(one_time / saving) conversations. Throws NonPositiveSaving.
std::int64_t breakeven(double one_time_usd, double per_conv_saving_usd);

double amortized_cost(double one_time_usd, std::int64_t n_conversations, double per_conv_usd);

/// Range of a / b when a and b are figures printed with the given number of
/// decimals (each true value lies within half a unit of the last digit).
struct RatioBounds {
  double lo = 0;
  double hi = 0;
  bool contains(double r) const { return r >= lo && r <= hi; }
};
RatioBounds printed_ratio_bounds(double a, int decimals_a, double b, int decimals_b);

/// Tokens the agent side of a conversation spends: agent turns plus routing
/// calls. User-simulator tokens are not part of deployment cost.
TokenVolume conversation_volume(const Conversation& conv);
TokenVolume mean_volume(const std::vector<Conversation>& convs);

struct CostRow {
  std::string domain;
  Condition condition = Condition::kInContext;
  TokenVolume volume;
  double usd = 0;
  double ratio_vs_in_context = 0;  // in-context usd / this usd; 0 if unknown
};

/// One row per condition present. Compiled conversations are priced at
/// self-host rates, all others at API rates.
std::vector<CostRow> cost_report(const std::string& domain,
                                 const std::vector<std::vector<Conversation>>& by_condition,
                                 const PriceSheet& sheet);

/// domain,condition,in_tokens,out_tokens,usd,ratio_vs_in_context
std::string cost_report_csv(const std::vector<CostRow>& rows);

}  // namespace flowc
