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

#include "amlrisk/common.hpp"
#include "amlrisk/trees.hpp"

namespace amlrisk::explain {

inline constexpr const char* kShapVariant = "path-dependent TreeSHAP (cover-weighted)";
inline constexpr std::size_t kBruteForceMaxFeatures = 12;

struct ShapExplanation {
  std::vector<double> attributions;  // one per model feature
  double base_value = 0.0;           // expected output under node covers
  double margin = 0.0;               // model output for the row
  // "probability" for DT/RF (leaf fractions), "margin" (log-odds) for GBDT.
  std::string space;
  std::string variant = kShapVariant;
};

struct ImportanceEntry {
  std::string feature;
  double mean_abs = 0.0;
};

using ImportanceRanking = std::vector<ImportanceEntry>;

struct Contribution {
  std::string feature;
  double attribution = 0.0;
};

/// Exact path-dependent Shapley values in polynomial time. Local accuracy holds:
/// base_value + sum(attributions) == margin up to rounding.
ShapExplanation tree_shap(const trees::TreeEnsemble& model, std::span<const double> row);

/// Reference implementation by enumerating all 2^d feature subsets, with the
/// conditional expectation taken over node covers. When `background` is non-empty
/// the covers are recounted by routing those rows through each tree.
/// Refuses models with more than kBruteForceMaxFeatures features.
ShapExplanation brute_force_shap(const trees::TreeEnsemble& model, std::span<const double> row,
                                 const Matrix& background = {});

/// Mean |attribution| per feature over `rows`, sorted descending. With
/// `aggregate_onehot`, columns named "<col>=<category>" are summed per row into a
/// single "<col>" entry before taking the absolute value.
ImportanceRanking global_importance(const trees::TreeEnsemble& model, const Matrix& rows,
                                    std::span<const std::string> feature_names,
                                    bool aggregate_onehot = false);

/// Largest |attribution| first.
std::vector<Contribution> top_k(const ShapExplanation& e,
                                std::span<const std::string> feature_names, std::size_t k);

}  // namespace amlrisk::explain
