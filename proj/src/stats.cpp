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

#include "flowc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

#include "flowc/rng.hpp"

namespace flowc {
namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double mean) {
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

// Sum of t^3 - t over tie groups.
double tie_term(const std::vector<double>& values) {
  auto sorted = values;
  std::sort(sorted.begin(), sorted.end());
  double term = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<double>(j - i);
    term += t * t * t - t;
    i = j;
  }
  return term;
}

double normal_two_sided(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

std::vector<std::int64_t> doubled(const std::vector<double>& ranks) {
  std::vector<std::int64_t> out;
  out.reserve(ranks.size());
  for (double r : ranks) out.push_back(std::llround(2.0 * r));
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<double> midranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

TestResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("wilcoxon_signed_rank needs two nonempty samples of equal size");
  }
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  TestResult res;
  res.n_effective = diffs.size();
  if (diffs.empty()) {
    res.all_zero = true;
    res.exact = true;
    return res;
  }
  std::vector<double> abs_d(diffs.size());
  std::transform(diffs.begin(), diffs.end(), abs_d.begin(), [](double d) { return std::fabs(d); });
  const auto ranks = midranks(abs_d);
  double w_plus = 0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] > 0) w_plus += ranks[i];
  }
  res.statistic = w_plus;
  const std::size_t n = diffs.size();

  if (n <= kWilcoxonExactMaxN) {
    // Distribution of the doubled positive-rank sum over all 2^n sign vectors.
    const auto r2 = doubled(ranks);
    const std::int64_t total2 = std::accumulate(r2.begin(), r2.end(), std::int64_t{0});
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1;
    std::int64_t reach = 0;
    for (auto r : r2) {
      for (std::int64_t s = reach; s >= 0; --s) {
        if (count[static_cast<std::size_t>(s)] != 0) {
          count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
        }
      }
      reach += r;
    }
    const std::int64_t obs2 = std::llround(2.0 * w_plus);
    const std::int64_t dev = std::llabs(2 * obs2 - total2);
    double tail = 0;
    for (std::int64_t s = 0; s <= total2; ++s) {
      if (std::llabs(2 * s - total2) >= dev) tail += count[static_cast<std::size_t>(s)];
    }
    res.p = std::min(1.0, tail / std::ldexp(1.0, static_cast<int>(n)));
    res.exact = true;
    return res;
  }

  const auto nd = static_cast<double>(n);
  const double mu = nd * (nd + 1) / 4.0;
  const double var = nd * (nd + 1) * (2 * nd + 1) / 24.0 - tie_term(abs_d) / 48.0;
  res.p = var <= 0 ? 1.0 : std::min(1.0, normal_two_sided((w_plus - mu) / std::sqrt(var)));
  return res;
}

TestResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u needs nonempty samples");
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  double r_a = 0;
  for (std::size_t i = 0; i < na; ++i) r_a += ranks[i];
  const auto nad = static_cast<double>(na), nbd = static_cast<double>(nb);
  const double u = r_a - nad * (nad + 1) / 2.0;

  TestResult res;
  res.statistic = u;
  res.n_effective = n;

  if (na <= kMannWhitneyExactMaxN && nb <= kMannWhitneyExactMaxN) {
    // count[k][s]: subsets of size k with doubled rank sum s.
    const auto r2 = doubled(ranks);
    const std::int64_t total2 = std::accumulate(r2.begin(), r2.end(), std::int64_t{0});
    const auto width = static_cast<std::size_t>(total2) + 1;
    std::vector<double> count((na + 1) * width, 0.0);
    count[0] = 1;
    for (auto r : r2) {
      for (std::size_t k = na; k >= 1; --k) {
        for (std::int64_t s = total2 - r; s >= 0; --s) {
          const double c = count[(k - 1) * width + static_cast<std::size_t>(s)];
          if (c != 0) count[k * width + static_cast<std::size_t>(s + r)] += c;
        }
      }
    }
    const std::int64_t center2 = static_cast<std::int64_t>(na) * static_cast<std::int64_t>(n + 1);
    const std::int64_t dev = std::llabs(std::llround(2.0 * r_a) - center2);
    double tail = 0, all = 0;
    for (std::size_t s = 0; s < width; ++s) {
      const double c = count[na * width + s];
      all += c;
      if (std::llabs(static_cast<std::int64_t>(s) - center2) >= dev) tail += c;
    }
    res.p = std::min(1.0, tail / all);
    res.exact = true;
    return res;
  }

  const auto nn = static_cast<double>(n);
  const double mu = nad * nbd / 2.0;
  const double var = nad * nbd / 12.0 * ((nn + 1) - tie_term(pooled) / (nn * (nn - 1)));
  res.p = var <= 0 ? 1.0 : std::min(1.0, normal_two_sided((u - mu) / std::sqrt(var)));
  return res;
}

double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("cohens_d needs at least two values per sample");
  }
  const double ma = mean_of(a), mb = mean_of(b);
  const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double pooled =
      ((na - 1) * sample_variance(a, ma) + (nb - 1) * sample_variance(b, mb)) / (na + nb - 2);
  if (pooled == 0.0) {
    if (ma == mb) return 0.0;
    throw DegenerateVariance();
  }
  return (ma - mb) / std::sqrt(pooled);
}

Interval bootstrap_ci_mean(const std::vector<double>& sample, std::size_t resamples,
                           std::uint64_t seed, double confidence) {
  if (sample.empty()) throw std::invalid_argument("bootstrap of an empty sample");
  if (resamples == 0) throw std::invalid_argument("bootstrap needs at least one resample");
  if (!(confidence > 0 && confidence < 1)) throw std::invalid_argument("confidence in (0,1)");
  const std::size_t n = sample.size();
  std::vector<double> means(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    SplitMix64 rng(derive_seed(seed, r));
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += sample[rng.below(n)];
    means[r] = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(resamples - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, resamples - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return means[lo];
    return means[lo] + (means[hi] - means[lo]) * frac;
  };
  const double tail = (1.0 - confidence) / 2.0;
  return {quantile(tail), quantile(1.0 - tail)};
}

std::vector<double> holm_bonferroni(const std::vector<double>& p_values) {
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p-values must lie in [0,1]");
  }
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return p_values[x] < p_values[y]; });
  std::vector<double> out(m);
  double running = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double adj = std::min(1.0, static_cast<double>(m - i) * p_values[order[i]]);
    running = std::max(running, adj);
    out[order[i]] = running;
  }
  return out;
}

std::string_view to_string(TestKind t) {
  return t == TestKind::kWilcoxonSignedRank ? "wilcoxon_signed_rank" : "mann_whitney_u";
}

std::vector<ComparisonResult> compare_conditions(const std::vector<Scorecard>& a,
                                                 const std::vector<Scorecard>& b, bool paired,
                                                 const CompareOptions& opts) {
  if (a.empty() || b.empty()) throw std::invalid_argument("compare_conditions needs cards");
  std::vector<const Scorecard*> xs, ys;
  if (paired) {
    std::map<std::int64_t, const Scorecard*> ia, ib;
    for (const auto& c : a) {
      if (!ia.emplace(c.scenario_id, &c).second) throw KeyMismatch("duplicate scenario in first set");
    }
    for (const auto& c : b) {
      if (!ib.emplace(c.scenario_id, &c).second) throw KeyMismatch("duplicate scenario in second set");
    }
    if (ia.size() != ib.size()) throw KeyMismatch("paired card sets cover different scenarios");
    for (auto ita = ia.begin(), itb = ib.begin(); ita != ia.end(); ++ita, ++itb) {
      if (ita->first != itb->first) {
        throw KeyMismatch("scenario " + std::to_string(ita->first) + " is not in both sets");
      }
      xs.push_back(ita->second);
      ys.push_back(itb->second);
    }
  } else {
    for (const auto& c : a) xs.push_back(&c);
    for (const auto& c : b) ys.push_back(&c);
    const auto by_id = [](const Scorecard* p, const Scorecard* q) {
      return p->scenario_id < q->scenario_id;
    };
    std::stable_sort(xs.begin(), xs.end(), by_id);
    std::stable_sort(ys.begin(), ys.end(), by_id);
  }

  std::vector<ComparisonResult> rows;
  std::vector<double> raw;
  for (auto c : kAllCriteria) {
    std::vector<double> va, vb;
    for (auto* p : xs) va.push_back(p->score(c));
    for (auto* p : ys) vb.push_back(p->score(c));

    ComparisonResult r;
    r.criterion = c;
    r.n_a = va.size();
    r.n_b = vb.size();
    r.mean_a = mean_of(va);
    r.mean_b = mean_of(vb);
    r.delta = r.mean_a - r.mean_b;
    const auto ci = static_cast<std::uint64_t>(c);
    r.ci_a = bootstrap_ci_mean(va, opts.resamples, derive_seed(opts.seed, 2 * ci));
    r.ci_b = bootstrap_ci_mean(vb, opts.resamples, derive_seed(opts.seed, 2 * ci + 1));
    if (va.size() >= 2 && vb.size() >= 2) {
      try {
        r.d = cohens_d(va, vb);
      } catch (const DegenerateVariance&) {
        r.d.reset();
      }
    }
    if (paired) {
      r.test = TestKind::kWilcoxonSignedRank;
      r.p_raw = wilcoxon_signed_rank(va, vb).p;
    } else {
      r.test = TestKind::kMannWhitneyU;
      r.p_raw = mann_whitney_u(va, vb).p;
    }
    raw.push_back(r.p_raw);
    rows.push_back(r);
  }
  const auto corrected = holm_bonferroni(raw);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].p_corrected = corrected[i];
  return rows;
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

Json comparison_to_json(const ComparisonResult& r) {
  Json j;
  j["criterion"] = std::string(criterion_name(r.criterion));
  j["mean_a"] = r.mean_a;
  j["mean_b"] = r.mean_b;
  j["ci_a"] = {r.ci_a.lo, r.ci_a.hi};
  j["ci_b"] = {r.ci_b.lo, r.ci_b.hi};
  j["delta"] = r.delta;
  j["d"] = r.d ? Json(*r.d) : Json(nullptr);
  j["p_raw"] = r.p_raw;
  j["p_corrected"] = r.p_corrected;
  j["stars"] = significance_stars(r.p_corrected);
  j["test"] = std::string(to_string(r.test));
  j["n_a"] = r.n_a;
  j["n_b"] = r.n_b;
  return j;
}

std::string comparisons_to_csv(const std::vector<ComparisonResult>& rows) {
  std::string out =
      "criterion,mean_a,mean_b,ci_a_lo,ci_a_hi,ci_b_lo,ci_b_hi,delta,d,p_raw,p_corrected,stars,"
      "test,n_a,n_b\n";
  for (const auto& r : rows) {
    out += std::string(criterion_name(r.criterion)) + "," + fmt(r.mean_a) + "," + fmt(r.mean_b) +
           "," + fmt(r.ci_a.lo) + "," + fmt(r.ci_a.hi) + "," + fmt(r.ci_b.lo) + "," +
           fmt(r.ci_b.hi) + "," + fmt(r.delta) + "," + (r.d ? fmt(*r.d) : std::string("NA")) +
           "," + fmt(r.p_raw) + "," + fmt(r.p_corrected) + "," +
           significance_stars(r.p_corrected) + "," + std::string(to_string(r.test)) + "," +
           std::to_string(r.n_a) + "," + std::to_string(r.n_b) + "\n";
  }
  return out;
}

}  // namespace flowc
