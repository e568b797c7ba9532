/*
 * Copyright 2026 The amlrisk Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "amlrisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "amlrisk/common.hpp"

namespace amlrisk::metrics {

std::string RunSummary::format(int digits) const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", digits, mean, digits, sd);
  return buf;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ParameterError("auroc: scores and labels differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the concordant-pair count plus the tied-pair count, accumulated exactly.
  std::uint64_t doubled = 0;
  std::uint64_t negatives_below = 0;
  std::uint64_t n_pos = 0;
  std::uint64_t n_neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? pos : neg) += 1;
      ++j;
    }
    doubled += 2 * pos * negatives_below + pos * neg;
    negatives_below += neg;
    n_pos += pos;
    n_neg += neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw ValidationError("auroc undefined: labels contain a single class");
  }
  return static_cast<double>(doubled) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const int> labels,
                             double threshold) {
  if (scores.size() != labels.size()) {
    throw ParameterError("confusion: scores and labels differ in length");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    bool predicted = scores[i] >= threshold;
    bool actual = labels[i] == 1;
    if (predicted && actual) ++cm.tp;
    else if (predicted) ++cm.fp;
    else if (actual) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

ClassificationReport classification_report(std::span<const double> scores,
                                           std::span<const int> labels, double threshold) {
  ClassificationReport r;
  r.threshold = threshold;
  r.auroc = auroc(scores, labels);
  r.confusion = confusion_at(scores, labels, threshold);
  const auto& cm = r.confusion;
  const double n = static_cast<double>(cm.total());
  r.accuracy = n > 0 ? static_cast<double>(cm.tp + cm.tn) / n : 0.0;
  r.precision = cm.tp + cm.fp > 0 ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp) : 0.0;
  r.recall = cm.tp + cm.fn > 0 ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

namespace {

double sample_var(std::span<const double> v, double m) {
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

TTestResult t_test(std::span<const double> a, std::span<const double> b, bool welch,
                   double alpha) {
  if (a.size() < 2 || b.size() < 2) {
    throw ParameterError("t_test: each sample needs at least two values");
  }
  TTestResult r;
  r.alpha = alpha;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = sample_var(a, ma);
  const double vb = sample_var(b, mb);

  double se2 = 0.0;
  if (welch) {
    se2 = va / na + vb / nb;
    const double num = se2 * se2;
    const double den = (va / na) * (va / na) / (na - 1) + (vb / nb) * (vb / nb) / (nb - 1);
    r.df = den > 0 ? num / den : na + nb - 2;
  } else {
    const double pooled = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2);
    se2 = pooled * (1.0 / na + 1.0 / nb);
    r.df = na + nb - 2;
  }

  const double diff = ma - mb;
  if (se2 <= 0.0) {
    r.degenerate = true;
    if (diff == 0.0) {
      r.t = 0.0;
      r.p_value = 1.0;
    } else {
      r.t = diff > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
  } else {
    r.t = diff / std::sqrt(se2);
    boost::math::students_t dist(r.df);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
    r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  }
  r.significant = r.p_value < alpha;
  return r;
}

RunSummary summarize_runs(std::span<const double> values, std::span<const double> seconds) {
  if (values.empty()) throw ParameterError("summarize_runs: no values");
  RunSummary s;
  s.values.assign(values.begin(), values.end());
  s.runs = values.size();
  s.mean = mean(values);
  s.single_run = values.size() == 1;
  s.sd = s.single_run ? 0.0 : sample_sd(values);
  s.total_seconds = std::accumulate(seconds.begin(), seconds.end(), 0.0);
  s.mean_seconds = seconds.empty() ? 0.0 : s.total_seconds / static_cast<double>(seconds.size());
  return s;
}

}  // namespace amlrisk::metrics
