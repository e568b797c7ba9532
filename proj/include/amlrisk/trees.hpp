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
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "amlrisk/common.hpp"

namespace amlrisk::trees {

inline constexpr int kUnlimitedDepth = -1;

// A split sends a row left iff row[feature] < threshold. Leaves have feature == -1.
struct Node {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // class-1 probability (DT/RF) or shrunk margin (GBDT)
  double cover = 0.0;  // training samples that reached the node

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const Node&, const Node&) = default;
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root

  int leaf_index(std::span<const double> row) const;
  double predict(std::span<const double> row) const { return nodes[leaf_index(row)].value; }
  int depth() const;
  std::size_t leaf_count() const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

enum class ModelKind { DT, RF, GBDT };
enum class MaxFeatures { Auto, Sqrt, All };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);
std::string to_string(MaxFeatures m);
MaxFeatures max_features_from_string(const std::string& s);

struct DtParams {
  int max_depth = kUnlimitedDepth;
  int min_samples_split = 2;
  bool balanced_class_weight = false;
  std::uint64_t seed = 0;
  friend bool operator==(const DtParams&, const DtParams&) = default;
};

struct RfParams {
  int n_estimators = 100;
  MaxFeatures max_features = MaxFeatures::Sqrt;
  int max_depth = kUnlimitedDepth;
  int min_samples_split = 2;
  bool balanced_class_weight = false;
  std::uint64_t seed = 0;
  friend bool operator==(const RfParams&, const RfParams&) = default;
};

struct GbdtParams {
  int n_estimators = 100;
  double learning_rate = 0.1;
  int max_depth = kUnlimitedDepth;
  int num_leaves = 31;
  double reg_lambda = 0.0;
  int max_bin = 255;
  bool is_unbalance = false;
  int min_data_in_leaf = 1;
  double min_child_weight = 1e-3;
  std::uint64_t seed = 0;
  friend bool operator==(const GbdtParams&, const GbdtParams&) = default;
};

using LearnerParams = std::variant<DtParams, RfParams, GbdtParams>;

ModelKind kind_of(const LearnerParams& p);
std::uint64_t seed_of(const LearnerParams& p);
LearnerParams with_seed(LearnerParams p, std::uint64_t seed);

struct TreeEnsemble {
  ModelKind kind = ModelKind::DT;
  std::vector<Tree> trees;
  double base_score = 0.0;  // GBDT log-odds prior; 0 otherwise
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  LearnerParams params;
  std::vector<std::vector<double>> bin_edges;  // GBDT per-feature cut points
  std::vector<double> train_loss;              // GBDT weighted logloss before/after each tree

  std::string params_fingerprint() const;
};

/// Greedy CART with Gini impurity. Ties between equal-gain splits go to the
/// lowest feature index, then the lowest threshold.
TreeEnsemble fit_decision_tree(const Matrix& X, std::span<const int> y, const DtParams& p);

/// Bagged CART: bootstrap of size n per tree, sqrt(d) candidate features per split
/// for Auto/Sqrt. Trees are fitted from per-tree derived seeds, so the result does
/// not depend on the worker count.
TreeEnsemble fit_random_forest(const Matrix& X, std::span<const int> y, const RfParams& p);

/// Newton boosting on logistic loss over quantile-binned features with leaf-wise
/// growth bounded by num_leaves and max_depth.
TreeEnsemble fit_gbdt(const Matrix& X, std::span<const int> y, const GbdtParams& p);

TreeEnsemble fit(const Matrix& X, std::span<const int> y, const LearnerParams& p);

std::vector<double> predict_margin(const TreeEnsemble& model, const Matrix& X);
std::vector<double> predict_proba(const TreeEnsemble& model, const Matrix& X);
double predict_proba_row(const TreeEnsemble& model, std::span<const double> row);
double predict_margin_row(const TreeEnsemble& model, std::span<const double> row);

/// Per-tree multiplier used when combining trees into the ensemble output.
double tree_weight(const TreeEnsemble& model);

// Quantile cut points for one feature: every midpoint between distinct values when
// they fit in max_bin bins, equal-frequency cuts otherwise.
std::vector<double> quantile_cuts(std::span<const double> column, int max_bin);

// Weighted logloss, positives weighted by `positive_weight`.
double logloss(std::span<const double> margin, std::span<const int> y, double positive_weight = 1.0);

}  // namespace amlrisk::trees
