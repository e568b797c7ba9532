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
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "amlrisk/trees.hpp"

namespace amlrisk::trees {

std::vector<double> quantile_cuts(std::span<const double> column, int max_bin) {
  if (max_bin < 2) throw ParameterError("max_bin must be >= 2");
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct;
  std::vector<std::size_t> counts;
  for (double v : sorted) {
    if (distinct.empty() || v != distinct.back()) {
      distinct.push_back(v);
      counts.push_back(0);
    }
    ++counts.back();
  }
  auto midpoint = [](double a, double b) {
    double mid = a + (b - a) / 2.0;
    return mid > a ? mid : b;
  };
  std::vector<double> cuts;
  if (distinct.size() <= static_cast<std::size_t>(max_bin)) {
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
      cuts.push_back(midpoint(distinct[i], distinct[i + 1]));
    }
    return cuts;
  }
  // Equal-frequency: close a bin once its share of the remaining rows is reached.
  const std::size_t n = sorted.size();
  std::size_t consumed = 0;
  std::size_t in_bin = 0;
  int bins_left = max_bin;
  for (std::size_t i = 0; i + 1 < distinct.size() && bins_left > 1; ++i) {
    in_bin += counts[i];
    const double target = static_cast<double>(n - consumed) / bins_left;
    const double next_in_bin = static_cast<double>(in_bin + counts[i + 1]);
    // Cut here if adding the next value overshoots the target by more than stopping short.
    if (static_cast<double>(in_bin) >= target ||
        next_in_bin - target > target - static_cast<double>(in_bin)) {
      cuts.push_back(midpoint(distinct[i], distinct[i + 1]));
      consumed += in_bin;
      in_bin = 0;
      --bins_left;
    }
  }
  return cuts;
}

double logloss(std::span<const double> margin, std::span<const int> y, double positive_weight) {
  double total = 0.0;
  double weight = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double w = y[i] == 1 ? positive_weight : 1.0;
    // log(1 + exp(-m)) for y=1, log(1 + exp(m)) for y=0, computed stably.
    const double m = y[i] == 1 ? -margin[i] : margin[i];
    const double l = m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    total += w * l;
    weight += w;
  }
  return weight > 0 ? total / weight : 0.0;
}

namespace {

struct BinnedMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::vector<double>> cuts;
  std::vector<std::size_t> offset;  // first histogram slot of each feature
  std::size_t total_bins = 0;
  std::vector<std::uint16_t> bins;  // column-major, bins[f * n + i]

  std::size_t bin_count(std::size_t f) const { return cuts[f].size() + 1; }
};

BinnedMatrix bin_matrix(const Matrix& X, int max_bin) {
  BinnedMatrix b;
  b.n = X.rows();
  b.d = X.cols();
  b.cuts.resize(b.d);
  b.offset.resize(b.d);
  b.bins.resize(b.n * b.d);
  parallel_for(b.d, [&](std::size_t f) {
    std::vector<double> col(b.n);
    for (std::size_t i = 0; i < b.n; ++i) col[i] = X(i, f);
    b.cuts[f] = quantile_cuts(col, max_bin);
    const auto& cuts = b.cuts[f];
    for (std::size_t i = 0; i < b.n; ++i) {
      // Bin = number of cuts <= x, so x < cuts[k] exactly when bin <= k.
      b.bins[f * b.n + i] = static_cast<std::uint16_t>(
          std::upper_bound(cuts.begin(), cuts.end(), col[i]) - cuts.begin());
    }
  });
  for (std::size_t f = 0; f < b.d; ++f) {
    b.offset[f] = b.total_bins;
    b.total_bins += b.bin_count(f);
  }
  return b;
}

struct HistBin {
  double g = 0.0;
  double h = 0.0;
  std::uint32_t count = 0;
};

struct Candidate {
  double gain = -std::numeric_limits<double>::infinity();
  int feature = -1;
  int bin = -1;
};

struct OpenLeaf {
  int node = 0;
  int depth = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  double G = 0.0;
  double H = 0.0;
  std::vector<HistBin> hist;
  Candidate best;

  std::size_t size() const { return end - begin; }
};

class TreeGrower {
 public:
  TreeGrower(const BinnedMatrix& data, const GbdtParams& p) : data_(data), p_(p) {}

  // Grows one tree on (g, h); returns it with shrunk leaf values and writes each
  // training row's leaf value into `delta`.
  Tree grow(std::span<const double> g, std::span<const double> h, std::span<double> delta) {
    rows_.resize(data_.n);
    std::iota(rows_.begin(), rows_.end(), 0u);

    Tree tree;
    tree.nodes.emplace_back();
    std::vector<OpenLeaf> leaves(1);
    OpenLeaf& root = leaves[0];
    root.begin = 0;
    root.end = data_.n;
    for (std::size_t i = 0; i < data_.n; ++i) {
      root.G += g[i];
      root.H += h[i];
    }
    build_hist(root, g, h);
    root.best = best_split(root);

    const std::size_t max_leaves = static_cast<std::size_t>(p_.num_leaves);
    while (leaves.size() < max_leaves) {
      std::size_t pick = leaves.size();
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i].best.feature < 0) continue;
        if (pick == leaves.size() || leaves[i].best.gain > leaves[pick].best.gain) pick = i;
      }
      if (pick == leaves.size()) break;
      split(tree, leaves, pick, g, h);
    }

    for (const auto& leaf : leaves) {
      Node& node = tree.nodes[leaf.node];
      node.value = -leaf.G / (leaf.H + p_.reg_lambda) * p_.learning_rate;
      node.cover = static_cast<double>(leaf.size());
      for (std::size_t i = leaf.begin; i < leaf.end; ++i) delta[rows_[i]] = node.value;
    }
    return tree;
  }

 private:
  void build_hist(OpenLeaf& leaf, std::span<const double> g, std::span<const double> h) {
    leaf.hist.assign(data_.total_bins, HistBin{});
    parallel_for(data_.d, [&](std::size_t f) {
      const std::uint16_t* col = data_.bins.data() + f * data_.n;
      HistBin* out = leaf.hist.data() + data_.offset[f];
      for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
        const auto r = rows_[i];
        HistBin& b = out[col[r]];
        b.g += g[r];
        b.h += h[r];
        ++b.count;
      }
    });
  }

  Candidate best_split(const OpenLeaf& leaf) const {
    Candidate best;
    if (p_.max_depth != kUnlimitedDepth && leaf.depth >= p_.max_depth) return best;
    const auto min_data = static_cast<std::uint32_t>(std::max(1, p_.min_data_in_leaf));
    if (leaf.size() < 2 * static_cast<std::size_t>(min_data)) return best;
    const double lambda = p_.reg_lambda;
    const double parent = leaf.G * leaf.G / (leaf.H + lambda);
    const auto n_leaf = static_cast<std::uint32_t>(leaf.size());
    for (std::size_t f = 0; f < data_.d; ++f) {
      const HistBin* hist = leaf.hist.data() + data_.offset[f];
      double gl = 0.0;
      double hl = 0.0;
      std::uint32_t cl = 0;
      for (std::size_t b = 0; b + 1 < data_.bin_count(f); ++b) {
        gl += hist[b].g;
        hl += hist[b].h;
        cl += hist[b].count;
        if (cl < min_data) continue;
        if (n_leaf - cl < min_data) break;
        const double gr = leaf.G - gl;
        const double hr = leaf.H - hl;
        if (hl < p_.min_child_weight || hr < p_.min_child_weight) continue;
        const double gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
        if (gain > best.gain && gain > 1e-15) {
          best = {gain, static_cast<int>(f), static_cast<int>(b)};
        }
      }
    }
    return best;
  }

  void split(Tree& tree, std::vector<OpenLeaf>& leaves, std::size_t pick,
             std::span<const double> g, std::span<const double> h) {
    OpenLeaf parent = std::move(leaves[pick]);
    const auto f = static_cast<std::size_t>(parent.best.feature);
    const auto bin = static_cast<std::uint16_t>(parent.best.bin);
    const std::uint16_t* col = data_.bins.data() + f * data_.n;
    auto mid = std::stable_partition(rows_.begin() + static_cast<long>(parent.begin),
                                     rows_.begin() + static_cast<long>(parent.end),
                                     [&](std::uint32_t r) { return col[r] <= bin; });

    OpenLeaf left;
    OpenLeaf right;
    left.begin = parent.begin;
    left.end = static_cast<std::size_t>(mid - rows_.begin());
    right.begin = left.end;
    right.end = parent.end;
    left.depth = right.depth = parent.depth + 1;
    for (std::size_t i = left.begin; i < left.end; ++i) {
      left.G += g[rows_[i]];
      left.H += h[rows_[i]];
    }
    right.G = parent.G - left.G;
    right.H = parent.H - left.H;

    // Build the smaller child directly, derive the larger one by subtraction.
    OpenLeaf& small = left.size() <= right.size() ? left : right;
    OpenLeaf& large = left.size() <= right.size() ? right : left;
    build_hist(small, g, h);
    large.hist = std::move(parent.hist);
    for (std::size_t k = 0; k < data_.total_bins; ++k) {
      large.hist[k].g -= small.hist[k].g;
      large.hist[k].h -= small.hist[k].h;
      large.hist[k].count -= small.hist[k].count;
    }

    const int li = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    Node& node = tree.nodes[parent.node];
    node.feature = static_cast<int>(f);
    node.threshold = data_.cuts[f][bin];
    node.left = li;
    node.right = li + 1;
    node.cover = static_cast<double>(parent.size());
    node.value = -parent.G / (parent.H + p_.reg_lambda) * p_.learning_rate;
    left.node = li;
    right.node = li + 1;
    left.best = best_split(left);
    right.best = best_split(right);

    leaves[pick] = std::move(left);
    leaves.push_back(std::move(right));
  }

  const BinnedMatrix& data_;
  const GbdtParams& p_;
  std::vector<std::uint32_t> rows_;
};

void validate(const GbdtParams& p) {
  if (p.n_estimators < 0) throw ParameterError("n_estimators must be >= 0");
  if (!(p.learning_rate > 0.0)) throw ParameterError("learning_rate must be > 0");
  if (p.num_leaves < 2) throw ParameterError("num_leaves must be >= 2");
  if (p.max_bin < 2) throw ParameterError("max_bin must be >= 2");
  if (p.max_bin > 65535) throw ParameterError("max_bin must be <= 65535");
  if (p.reg_lambda < 0.0) throw ParameterError("reg_lambda must be >= 0");
  if (p.max_depth != kUnlimitedDepth && p.max_depth < 1) {
    throw ParameterError("max_depth must be >= 1 or -1");
  }
}

}  // namespace

TreeEnsemble fit_gbdt(const Matrix& X, std::span<const int> y, const GbdtParams& p) {
  validate(p);
  if (X.rows() == 0) throw ParameterError("cannot fit a model on empty input");
  if (X.rows() != y.size()) throw ParameterError("X and y differ in row count");
  for (double v : X.data()) {
    if (!std::isfinite(v)) throw ValidationError("feature matrix contains non-finite values");
  }
  std::size_t pos = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw ValidationError("labels must be 0 or 1");
    pos += static_cast<std::size_t>(v);
  }
  const std::size_t neg = y.size() - pos;
  if (pos == 0 || neg == 0) {
    throw ValidationError("gbdt needs both classes: base log-odds undefined for a single class");
  }

  const double pos_weight =
      p.is_unbalance ? static_cast<double>(neg) / static_cast<double>(pos) : 1.0;
  const double weighted_rate = static_cast<double>(pos) * pos_weight /
                               (static_cast<double>(pos) * pos_weight + static_cast<double>(neg));

  TreeEnsemble model;
  model.kind = ModelKind::GBDT;
  model.n_features = X.cols();
  model.params = p;
  model.base_score = std::log(weighted_rate / (1.0 - weighted_rate));

  const BinnedMatrix data = bin_matrix(X, p.max_bin);
  model.bin_edges = data.cuts;

  const std::size_t n = X.rows();
  std::vector<double> margin(n, model.base_score);
  std::vector<double> g(n);
  std::vector<double> h(n);
  std::vector<double> delta(n);
  model.train_loss.push_back(logloss(margin, y, pos_weight));

  TreeGrower grower(data, p);
  for (int t = 0; t < p.n_estimators; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = sigmoid(margin[i]);
      const double w = y[i] == 1 ? pos_weight : 1.0;
      g[i] = w * (prob - y[i]);
      h[i] = w * prob * (1.0 - prob);
    }
    model.trees.push_back(grower.grow(g, h, delta));
    for (std::size_t i = 0; i < n; ++i) margin[i] += delta[i];
    model.train_loss.push_back(logloss(margin, y, pos_weight));
  }
  return model;
}

}  // namespace amlrisk::trees
