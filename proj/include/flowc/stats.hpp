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
#include <optional>
#include <string>
#include <vector>

#include "flowc/error.hpp"
#include "flowc/io.hpp"
#include "flowc/judge.hpp"

namespace flowc {

inline constexpr std::size_t kWilcoxonExactMaxN = 25;
inline constexpr std::size_t kMannWhitneyExactMaxN = 20;
inline constexpr std::size_t kDefaultResamples = 10000;

class DegenerateVariance : public Error {
 public:
  DegenerateVariance()
      : Error("degenerate_variance", "pooled standard deviation is zero but means differ") {}
};

/// Midranks (1-based) of `values`; ties share the average of their ranks.
std::vector<double> midranks(const std::vector<double>& values);

struct TestResult {
  double statistic = 0;  // W+ for Wilcoxon, U of the first sample for Mann-Whitney
  double p = 1.0;        // two-sided
  std::size_t n_effective = 0;
  bool exact = false;
  bool all_zero = false;  // Wilcoxon only: every difference was zero, p = 1
};

/// Paired signed-rank test on a - b. Zero differences are dropped and ties
/// get midranks. Exact null distribution when at most kWilcoxonExactMaxN
/// differences remain, otherwise a tie-corrected normal approximation.
TestResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

/// Two-sided rank-sum test. Exact when both samples have at most
/// kMannWhitneyExactMaxN values, otherwise a tie-corrected normal
/// approximation.
TestResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

/// (mean_a - mean_b) / pooled SD. Returns 0 when both samples are constant
/// with equal means; throws DegenerateVariance when they are constant with
/// different means.
double cohens_d(const std::vector<double>& a, const std::vector<double>& b);

struct Interval {
  double lo = 0;
  double hi = 0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Percentile bootstrap of the mean. Resample r draws from its own seed
/// derive_seed(seed, r).
Interval bootstrap_ci_mean(const std::vector<double>& sample,
                           std::size_t resamples = kDefaultResamples, std::uint64_t seed = 0,
                           double confidence = 0.95);

/// Holm step-down adjustment, returned in input order.
std::vector<double> holm_bonferroni(const std::vector<double>& p_values);

enum class TestKind { kWilcoxonSignedRank, kMannWhitneyU };
std::string_view to_string(TestKind t);

struct ComparisonResult {
  Criterion criterion = Criterion::kTaskSuccess;
  double mean_a = 0;
  double mean_b = 0;
  Interval ci_a;
  Interval ci_b;
  double delta = 0;
  std::optional<double> d;  // absent when the effect size is undefined
  double p_raw = 1;
  double p_corrected = 1;
  TestKind test = TestKind::kWilcoxonSignedRank;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

struct CompareOptions {
  std::size_t resamples = kDefaultResamples;
  std::uint64_t seed = 0;
};

/// Five comparisons (one per criterion), Holm-corrected together. Paired
/// comparisons match cards by scenario_id and throw KeyMismatch unless both
/// sets cover the same scenarios exactly once.
std::vector<ComparisonResult> compare_conditions(const std::vector<Scorecard>& a,
                                                 const std::vector<Scorecard>& b, bool paired,
                                                 const CompareOptions& opts = {});

/// "***" below 0.001, "**" below 0.01, "*" below 0.05, else "".
std::string significance_stars(double p);

Json comparison_to_json(const ComparisonResult& r);
std::string comparisons_to_csv(const std::vector<ComparisonResult>& rows);

}  // namespace flowc
