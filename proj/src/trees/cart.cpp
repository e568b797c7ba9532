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
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>

#include "amlrisk/trees.hpp"

namespace amlrisk::trees {
namespace {

using RowList = std::vector<std::uint32_t>;

struct CartConfig {
  int max_depth = kUnlimitedDepth;
  double min_samples_split = 2;
  std::size_t max_features = 0;  // 0: every feature at every split
  std::array<double, 2> class_weight{1.0, 1.0};
};

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Exact CART over presorted per-feature row lists. Each open node owns one sorted
// list per feature; splitting partitions them stably, O(rows * features) per level.
class CartBuilder {
 public:
  CartBuilder(const Matrix& X, std::span<const int> y, std::vector<double> multiplicity,
              const CartConfig& cfg, std::uint64_t seed)
      : X_(X), y_(y), mult_(std::move(multiplicity)), cfg_(cfg), rng_(seed) {}

  Tree build() {
    const std::size_t d = X_.cols();
    std::vector<RowList> sorted(d);
    RowList present;
    for (std::uint32_t i = 0; i < X_.rows(); ++i) {
      if (mult_[i] > 0) present.push_back(i);
    }
    for (std::size_t f = 0; f < d; ++f) {
      sorted[f] = present;
      std::stable_sort(sorted[f].begin(), sorted[f].end(),
                       [&](std::uint32_t a, std::uint32_t b) { return X_(a, f) < X_(b, f); });
    }

    Tree tree;
    tree.nodes.emplace_back();
    struct Work {
      int node;
      int depth;
      RowList rows;
      std::vector<RowList> sorted;
    };
    std::vector<Work> stack;
    stack.push_back({0, 0, present, std::move(sorted)});
    std::vector<char> goes_left(X_.rows(), 0);

    while (!stack.empty()) {
      Work w = std::move(stack.back());
      stack.pop_back();

      std::array<double, 2> cls{0.0, 0.0};
      double count = 0.0;
      for (auto r : w.rows) {
        cls[y_[r]] += mult_[r] * cfg_.class_weight[y_[r]];
        count += mult_[r];
      }
      Node& node = tree.nodes[w.node];
      node.cover = count;
      node.value = cls[0] + cls[1] > 0 ? cls[1] / (cls[0] + cls[1]) : 0.0;

      const bool pure = cls[0] == 0.0 || cls[1] == 0.0;
      const bool depth_capped = cfg_.max_depth != kUnlimitedDepth && w.depth >= cfg_.max_depth;
      if (pure || depth_capped || count < cfg_.min_samples_split) continue;

      SplitChoice best = find_split(w.sorted, cls);
      if (best.feature < 0) continue;

      for (auto r : w.rows) goes_left[r] = X_(r, best.feature) < best.threshold;
      Work left{0, w.depth + 1, {}, std::vector<RowList>(d)};
      Work right{0, w.depth + 1, {}, std::vector<RowList>(d)};
      for (auto r : w.rows) (goes_left[r] ? left.rows : right.rows).push_back(r);
      for (std::size_t f = 0; f < d; ++f) {
        left.sorted[f].reserve(left.rows.size());
        right.sorted[f].reserve(right.rows.size());
        for (auto r : w.sorted[f]) (goes_left[r] ? left.sorted[f] : right.sorted[f]).push_back(r);
      }
      w.sorted.clear();

      const int li = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      Node& parent = tree.nodes[w.node];
      parent.feature = best.feature;
      parent.threshold = best.threshold;
      parent.left = li;
      parent.right = li + 1;
      left.node = li;
      right.node = li + 1;
      stack.push_back(std::move(right));
      stack.push_back(std::move(left));
    }
    return tree;
  }

 private:
  std::vector<std::size_t> candidate_features(const std::vector<RowList>& sorted) {
    const std::size_t d = sorted.size();
    auto non_constant = [&](std::size_t f) {
      const auto& s = sorted[f];
      return !s.empty() && X_(s.front(), f) < X_(s.back(), f);
    };
    std::vector<std::size_t> out;
    if (cfg_.max_features == 0 || cfg_.max_features >= d) {
      for (std::size_t f = 0; f < d; ++f) {
        if (non_constant(f)) out.push_back(f);
      }
      return out;
    }
    // Draw features in random order until max_features non-constant ones are found.
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng_);
    for (auto f : perm) {
      if (out.size() == cfg_.max_features) break;
      if (non_constant(f)) out.push_back(f);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  SplitChoice find_split(const std::vector<RowList>& sorted, const std::array<double, 2>& cls) {
    SplitChoice best;
    const double total = cls[0] + cls[1];
    const double parent_score = (cls[0] * cls[0] + cls[1] * cls[1]) / total;
    const double eps = 1e-12 * std::max(1.0, total);
    double best_gain = -std::numeric_limits<double>::infinity();

    for (auto f : candidate_features(sorted)) {
      const auto& rows = sorted[f];
      std::array<double, 2> left{0.0, 0.0};
      for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const auto r = rows[i];
        left[y_[r]] += mult_[r] * cfg_.class_weight[y_[r]];
        const double a = X_(r, f);
        const double b = X_(rows[i + 1], f);
        if (!(a < b)) continue;
        const double wl = left[0] + left[1];
        const double wr = total - wl;
        if (wl <= 0.0 || wr <= 0.0) continue;
        const double r0 = cls[0] - left[0];
        const double r1 = cls[1] - left[1];
        const double score = (left[0] * left[0] + left[1] * left[1]) / wl + (r0 * r0 + r1 * r1) / wr;
        const double gain = (score - parent_score) / total;
        if (gain > best_gain + eps) {
          best_gain = gain;
          double mid = a + (b - a) / 2.0;
          if (!(mid > a)) mid = b;
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  std::span<const int> y_;
  std::vector<double> mult_;
  CartConfig cfg_;
  std::mt19937_64 rng_;
};

void check_inputs(const Matrix& X, std::span<const int> y) {
  if (X.rows() == 0) throw ParameterError("cannot fit a tree on empty input");
  if (X.rows() != y.size()) throw ParameterError("X and y differ in row count");
  for (double v : X.data()) {
    if (!std::isfinite(v)) throw ValidationError("feature matrix contains non-finite values");
  }
  for (int v : y) {
    if (v != 0 && v != 1) throw ValidationError("labels must be 0 or 1");
  }
}

std::array<double, 2> balanced_weights(std::span<const int> y, bool enabled) {
  if (!enabled) return {1.0, 1.0};
  std::array<double, 2> counts{0.0, 0.0};
  for (int v : y) counts[v] += 1.0;
  const double n = counts[0] + counts[1];
  std::array<double, 2> w{1.0, 1.0};
  for (int c = 0; c < 2; ++c) w[c] = counts[c] > 0 ? n / (2.0 * counts[c]) : 1.0;
  return w;
}

std::size_t resolve_max_features(MaxFeatures m, std::size_t d) {
  switch (m) {
    case MaxFeatures::All:
      return 0;
    case MaxFeatures::Auto:
    case MaxFeatures::Sqrt:
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
  }
  return 0;
}

}  // namespace

TreeEnsemble fit_decision_tree(const Matrix& X, std::span<const int> y, const DtParams& p) {
  check_inputs(X, y);
  if (p.max_depth != kUnlimitedDepth && p.max_depth < 1) {
    throw ParameterError("max_depth must be >= 1 or unlimited");
  }
  CartConfig cfg;
  cfg.max_depth = p.max_depth;
  cfg.min_samples_split = p.min_samples_split;
  cfg.class_weight = balanced_weights(y, p.balanced_class_weight);

  TreeEnsemble model;
  model.kind = ModelKind::DT;
  model.n_features = X.cols();
  model.params = p;
  CartBuilder builder(X, y, std::vector<double>(X.rows(), 1.0), cfg, p.seed);
  model.trees.push_back(builder.build());
  return model;
}

TreeEnsemble fit_random_forest(const Matrix& X, std::span<const int> y, const RfParams& p) {
  check_inputs(X, y);
  if (p.n_estimators < 1) throw ParameterError("n_estimators must be >= 1");
  if (p.max_depth != kUnlimitedDepth && p.max_depth < 1) {
    throw ParameterError("max_depth must be >= 1 or unlimited");
  }
  CartConfig cfg;
  cfg.max_depth = p.max_depth;
  cfg.min_samples_split = p.min_samples_split;
  cfg.max_features = resolve_max_features(p.max_features, X.cols());
  cfg.class_weight = balanced_weights(y, p.balanced_class_weight);

  TreeEnsemble model;
  model.kind = ModelKind::RF;
  model.n_features = X.cols();
  model.params = p;
  model.trees.resize(static_cast<std::size_t>(p.n_estimators));
  const std::size_t n = X.rows();
  parallel_for(model.trees.size(), [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(p.seed, "rf_tree", t);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> mult(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) mult[pick(rng)] += 1.0;
    CartBuilder builder(X, y, std::move(mult), cfg, mix_seed(seed));
    model.trees[t] = builder.build();
  });
  return model;
}

}  // namespace amlrisk::trees
