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

#include "amlrisk/explain.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace amlrisk::explain {

using trees::ModelKind;
using trees::Tree;
using trees::TreeEnsemble;

namespace {

// One element of the unique feature path kept by TreeSHAP.
struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;  // share of cover flowing this way when the feature is unknown
  double one_fraction = 0.0;   // 1 if the row itself goes this way, else 0
  double pweight = 0.0;        // permutation weight of subsets of a given size
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction,
                 int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / static_cast<double>(depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one_portion * (depth + 1) / ((i + 1) * one);
      next_one_portion = tmp - path[i].pweight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total permutation weight if the element at `index` were unwound.
double unwound_path_sum(const PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next_one_portion * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next_one_portion = path[i].pweight - tmp * zero * ((depth - i) / static_cast<double>(depth + 1));
    } else if (zero != 0.0) {
      total += (path[i].pweight / zero) / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

struct ChildShares {
  double left;
  double right;
};

ChildShares shares(const Tree& t, const trees::Node& n) {
  const double total = t.nodes[n.left].cover + t.nodes[n.right].cover;
  if (total <= 0.0) return {0.5, 0.5};
  return {t.nodes[n.left].cover / total, t.nodes[n.right].cover / total};
}

void recurse(const Tree& tree, std::span<const double> row, std::vector<double>& phi, int node,
             int depth, PathElement* parent_path, double parent_zero, double parent_one,
             int parent_feature, double scale) {
  // Each level gets its own copy of the path, laid out after the parent's.
  PathElement* path = parent_path + depth + 1;
  std::copy(parent_path, parent_path + depth + 1, path);
  extend_path(path, depth, parent_zero, parent_one, parent_feature);

  const trees::Node& n = tree.nodes[node];
  if (n.is_leaf()) {
    for (int i = 1; i <= depth; ++i) {
      const double w = unwound_path_sum(path, depth, i);
      const PathElement& el = path[i];
      phi[el.feature] += w * (el.one_fraction - el.zero_fraction) * n.value * scale;
    }
    return;
  }

  const bool go_left = row[n.feature] < n.threshold;
  const int hot = go_left ? n.left : n.right;
  const int cold = go_left ? n.right : n.left;
  const auto s = shares(tree, n);
  const double hot_zero = go_left ? s.left : s.right;
  const double cold_zero = go_left ? s.right : s.left;
  double incoming_zero = 1.0;
  double incoming_one = 1.0;

  // A feature already on the path is unwound and re-extended with combined fractions.
  int index = 0;
  for (; index <= depth; ++index) {
    if (path[index].feature == n.feature) break;
  }
  if (index != depth + 1) {
    incoming_zero = path[index].zero_fraction;
    incoming_one = path[index].one_fraction;
    unwind_path(path, depth, index);
    depth -= 1;
  }

  recurse(tree, row, phi, hot, depth + 1, path, hot_zero * incoming_zero, incoming_one, n.feature,
          scale);
  recurse(tree, row, phi, cold, depth + 1, path, cold_zero * incoming_zero, 0.0, n.feature, scale);
}

double expected_value(const Tree& tree, int node) {
  const auto& n = tree.nodes[node];
  if (n.is_leaf()) return n.value;
  const auto s = shares(tree, n);
  return s.left * expected_value(tree, n.left) + s.right * expected_value(tree, n.right);
}

double base_offset(const TreeEnsemble& model) {
  return model.kind == ModelKind::GBDT ? model.base_score : 0.0;
}

std::string space_of(const TreeEnsemble& model) {
  return model.kind == ModelKind::GBDT ? "margin" : "probability";
}

void check_row(const TreeEnsemble& model, std::span<const double> row) {
  if (row.size() != model.n_features) {
    throw ParameterError("row has " + std::to_string(row.size()) + " features, model expects " +
                         std::to_string(model.n_features));
  }
}

}  // namespace

ShapExplanation tree_shap(const TreeEnsemble& model, std::span<const double> row) {
  check_row(model, row);
  ShapExplanation out;
  out.space = space_of(model);
  out.attributions.assign(model.n_features, 0.0);
  out.base_value = base_offset(model);
  const double weight = trees::tree_weight(model);

  std::vector<PathElement> scratch;
  for (const auto& tree : model.trees) {
    const int max_depth = tree.depth() + 2;
    scratch.assign(static_cast<std::size_t>(max_depth * (max_depth + 1) / 2), PathElement{});
    recurse(tree, row, out.attributions, 0, 0, scratch.data(), 1.0, 1.0, -1, weight);
    out.base_value += weight * expected_value(tree, 0);
  }
  out.margin = trees::predict_margin_row(model, row);
  return out;
}

namespace {

// E[tree(x) | x_S] with unknown features averaged by the given per-node covers.
double conditional_value(const Tree& tree, const std::vector<double>& cover, int node,
                         std::span<const double> row, std::uint32_t known) {
  const auto& n = tree.nodes[node];
  if (n.is_leaf()) return n.value;
  if (known & (1u << n.feature)) {
    return conditional_value(tree, cover, row[n.feature] < n.threshold ? n.left : n.right, row,
                             known);
  }
  const double l = cover[n.left];
  const double r = cover[n.right];
  const double wl = l + r > 0 ? l / (l + r) : 0.5;
  return wl * conditional_value(tree, cover, n.left, row, known) +
         (1.0 - wl) * conditional_value(tree, cover, n.right, row, known);
}

std::vector<double> recount_covers(const Tree& tree, const Matrix& background) {
  std::vector<double> cover(tree.nodes.size(), 0.0);
  for (std::size_t r = 0; r < background.rows(); ++r) {
    auto row = background.row(r);
    int i = 0;
    cover[0] += 1.0;
    while (!tree.nodes[i].is_leaf()) {
      const auto& n = tree.nodes[i];
      i = row[n.feature] < n.threshold ? n.left : n.right;
      cover[i] += 1.0;
    }
  }
  return cover;
}

}  // namespace

ShapExplanation brute_force_shap(const TreeEnsemble& model, std::span<const double> row,
                                 const Matrix& background) {
  check_row(model, row);
  const std::size_t d = model.n_features;
  if (d > kBruteForceMaxFeatures) {
    throw ParameterError("brute_force_shap enumerates 2^d subsets; refusing d=" +
                         std::to_string(d) + " > " + std::to_string(kBruteForceMaxFeatures));
  }
  if (!background.empty() && background.cols() != d) {
    throw ParameterError("background width does not match the model");
  }
  const std::uint32_t subsets = 1u << d;
  std::vector<double> value(subsets, 0.0);
  const double weight = trees::tree_weight(model);
  for (const auto& tree : model.trees) {
    std::vector<double> cover;
    if (background.empty()) {
      for (const auto& n : tree.nodes) cover.push_back(n.cover);
    } else {
      cover = recount_covers(tree, background);
    }
    for (std::uint32_t s = 0; s < subsets; ++s) {
      value[s] += weight * conditional_value(tree, cover, 0, row, s);
    }
  }

  // Shapley kernel |S|! (d - |S| - 1)! / d!
  std::vector<double> factorial(d + 1, 1.0);
  for (std::size_t i = 1; i <= d; ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);

  ShapExplanation out;
  out.space = space_of(model);
  out.attributions.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const std::uint32_t bit = 1u << i;
    for (std::uint32_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(__builtin_popcount(s));
      const double w = factorial[size] * factorial[d - size - 1] / factorial[d];
      out.attributions[i] += w * (value[s | bit] - value[s]);
    }
  }
  out.base_value = base_offset(model) + value[0];
  out.margin = base_offset(model) + value[subsets - 1];
  return out;
}

ImportanceRanking global_importance(const TreeEnsemble& model, const Matrix& rows,
                                    std::span<const std::string> feature_names,
                                    bool aggregate_onehot) {
  if (rows.empty()) throw ParameterError("global_importance needs at least one row");
  if (feature_names.size() != model.n_features) {
    throw ParameterError("feature name count does not match the model");
  }
  // Group columns: identity, or by the "<col>=" prefix when aggregating.
  std::vector<std::string> group_names;
  std::vector<std::size_t> group_of(model.n_features);
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < model.n_features; ++j) {
    std::string key = feature_names[j];
    if (aggregate_onehot) {
      auto eq = key.find('=');
      if (eq != std::string::npos) key = key.substr(0, eq);
    }
    auto [it, inserted] = index.emplace(key, group_names.size());
    if (inserted) group_names.push_back(key);
    group_of[j] = it->second;
  }

  const std::size_t g = group_names.size();
  std::vector<double> per_row(rows.rows() * g, 0.0);
  parallel_for(rows.rows(), [&](std::size_t r) {
    const auto e = tree_shap(model, rows.row(r));
    double* out = per_row.data() + r * g;
    for (std::size_t j = 0; j < model.n_features; ++j) out[group_of[j]] += e.attributions[j];
  });
  ImportanceRanking ranking(g);
  for (std::size_t k = 0; k < g; ++k) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows.rows(); ++r) acc += std::fabs(per_row[r * g + k]);
    ranking[k] = {group_names[k], acc / static_cast<double>(rows.rows())};
  }
  std::stable_sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
    return a.mean_abs > b.mean_abs;
  });
  return ranking;
}

std::vector<Contribution> top_k(const ShapExplanation& e,
                                std::span<const std::string> feature_names, std::size_t k) {
  std::vector<Contribution> all;
  for (std::size_t j = 0; j < e.attributions.size(); ++j) {
    all.push_back({j < feature_names.size() ? feature_names[j] : "f" + std::to_string(j),
                   e.attributions[j]});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return std::fabs(a.attribution) > std::fabs(b.attribution);
  });
  if (all.size() > k) all.resize(k);
  return all;
}

}  // namespace amlrisk::explain
