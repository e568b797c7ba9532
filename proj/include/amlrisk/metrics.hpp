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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace amlrisk::metrics {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassificationReport {
  double auroc = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.5;
  ConfusionMatrix confusion;
};

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  bool significant = false;  // two-sided, at alpha
  bool degenerate = false;   // zero pooled variance
  double alpha = 0.05;
};

struct RunSummary {
  std::vector<double> values;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t runs = 0;
  bool single_run = false;
  double total_seconds = 0.0;
  double mean_seconds = 0.0;

  // "0.961 ± 0.005"
  std::string format(int digits = 3) const;
};

/// Area under the ROC curve: the fraction of positive/negative pairs where the
/// positive scores higher, ties counted as half. Computed in O(n log n) by
/// grouping tied scores; the result is exactly the pair count ratio.
/// Throws ValidationError unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const int> labels,
                             double threshold = 0.5);

/// Predictions are `score >= threshold`. Precision, recall and F1 are for class 1
/// and fall back to 0 on a zero denominator.
ClassificationReport classification_report(std::span<const double> scores,
                                           std::span<const int> labels, double threshold = 0.5);

/// Two-sample t-test, two-sided. Pooled-variance Student's test by default;
/// `welch` switches to unequal variances with Welch-Satterthwaite df.
TTestResult t_test(std::span<const double> a, std::span<const double> b, bool welch = false,
                   double alpha = 0.05);

RunSummary summarize_runs(std::span<const double> values, std::span<const double> seconds = {});

double mean(std::span<const double> v);
double sample_sd(std::span<const double> v);

}  // namespace amlrisk::metrics
