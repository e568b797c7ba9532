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

#include <algorithm>
#include <sstream>

#include "amlrisk/trees.hpp"

namespace amlrisk::trees {

int Tree::leaf_index(std::span<const double> row) const {
  int i = 0;
  while (!nodes[i].is_leaf()) {
    const Node& n = nodes[i];
    i = row[n.feature] < n.threshold ? n.left : n.right;
  }
  return i;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) {
      best = std::max(best, d[i]);
      continue;
    }
    d[nodes[i].left] = d[i] + 1;
    d[nodes[i].right] = d[i] + 1;
  }
  return best;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::DT:
      return "dt";
    case ModelKind::RF:
      return "rf";
    case ModelKind::GBDT:
      return "gbdt";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "dt") return ModelKind::DT;
  if (s == "rf") return ModelKind::RF;
  if (s == "gbdt") return ModelKind::GBDT;
  throw ParameterError("unknown learner kind '" + s + "' (expected dt, rf or gbdt)");
}

std::string to_string(MaxFeatures m) {
  switch (m) {
    case MaxFeatures::Auto:
      return "auto";
    case MaxFeatures::Sqrt:
      return "sqrt";
    case MaxFeatures::All:
      return "all";
  }
  return "?";
}

MaxFeatures max_features_from_string(const std::string& s) {
  if (s == "auto") return MaxFeatures::Auto;
  if (s == "sqrt") return MaxFeatures::Sqrt;
  if (s == "all") return MaxFeatures::All;
  throw ParameterError("unknown max_features '" + s + "' (expected auto, sqrt or all)");
}

ModelKind kind_of(const LearnerParams& p) {
  return static_cast<ModelKind>(p.index());
}

std::uint64_t seed_of(const LearnerParams& p) {
  return std::visit([](const auto& v) { return v.seed; }, p);
}

LearnerParams with_seed(LearnerParams p, std::uint64_t seed) {
  std::visit([seed](auto& v) { v.seed = seed; }, p);
  return p;
}

std::string TreeEnsemble::params_fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(kind) << ";d=" << n_features;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DtParams>) {
          os << ";max_depth=" << v.max_depth << ";min_samples_split=" << v.min_samples_split
             << ";balanced=" << v.balanced_class_weight;
        } else if constexpr (std::is_same_v<T, RfParams>) {
          os << ";n_estimators=" << v.n_estimators << ";max_features=" << to_string(v.max_features)
             << ";max_depth=" << v.max_depth << ";min_samples_split=" << v.min_samples_split
             << ";balanced=" << v.balanced_class_weight;
        } else {
          os << ";n_estimators=" << v.n_estimators << ";learning_rate=" << v.learning_rate
             << ";max_depth=" << v.max_depth << ";num_leaves=" << v.num_leaves
             << ";reg_lambda=" << v.reg_lambda << ";max_bin=" << v.max_bin
             << ";is_unbalance=" << v.is_unbalance << ";min_data_in_leaf=" << v.min_data_in_leaf
             << ";min_child_weight=" << v.min_child_weight;
        }
        os << ";seed=" << v.seed;
      },
      params);
  return os.str();
}

TreeEnsemble fit(const Matrix& X, std::span<const int> y, const LearnerParams& p) {
  return std::visit(
      [&](const auto& v) -> TreeEnsemble {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DtParams>) return fit_decision_tree(X, y, v);
        else if constexpr (std::is_same_v<T, RfParams>) return fit_random_forest(X, y, v);
        else return fit_gbdt(X, y, v);
      },
      p);
}

double tree_weight(const TreeEnsemble& model) {
  if (model.kind == ModelKind::RF && !model.trees.empty()) {
    return 1.0 / static_cast<double>(model.trees.size());
  }
  return 1.0;
}

double predict_margin_row(const TreeEnsemble& model, std::span<const double> row) {
  if (row.size() != model.n_features) {
    throw ParameterError("row has " + std::to_string(row.size()) + " features, model expects " +
                         std::to_string(model.n_features));
  }
  double sum = 0.0;
  for (const auto& t : model.trees) sum += t.predict(row);
  if (model.kind == ModelKind::GBDT) return model.base_score + sum;
  if (model.kind == ModelKind::RF) return sum / static_cast<double>(model.trees.size());
  return sum;
}

double predict_proba_row(const TreeEnsemble& model, std::span<const double> row) {
  const double m = predict_margin_row(model, row);
  return model.kind == ModelKind::GBDT ? sigmoid(m) : m;
}

std::vector<double> predict_margin(const TreeEnsemble& model, const Matrix& X) {
  if (X.cols() != model.n_features) {
    throw ParameterError("matrix has " + std::to_string(X.cols()) + " columns, model expects " +
                         std::to_string(model.n_features));
  }
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict_margin_row(model, X.row(i));
  return out;
}

std::vector<double> predict_proba(const TreeEnsemble& model, const Matrix& X) {
  auto out = predict_margin(model, X);
  if (model.kind == ModelKind::GBDT) {
    for (auto& v : out) v = sigmoid(v);
  }
  return out;
}

}  // namespace amlrisk::trees
