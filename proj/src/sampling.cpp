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

#include "amlrisk/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

namespace amlrisk::sampling {
namespace {

std::array<std::vector<std::size_t>, 2> by_class(std::span<const int> labels) {
  std::array<std::vector<std::size_t>, 2> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("labels must be 0 or 1");
    out[labels[i]].push_back(i);
  }
  return out;
}

// Largest-remainder allocation of `take` rows across classes proportional to size.
std::array<std::size_t, 2> allocate(const std::array<std::size_t, 2>& counts, std::size_t take) {
  const double n = static_cast<double>(counts[0] + counts[1]);
  std::array<std::size_t, 2> alloc{};
  std::array<double, 2> rem{};
  std::size_t assigned = 0;
  for (int c = 0; c < 2; ++c) {
    double exact = static_cast<double>(counts[c]) * static_cast<double>(take) / n;
    alloc[c] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    alloc[c] = std::min(alloc[c], counts[c]);
    rem[c] = exact - static_cast<double>(alloc[c]);
    assigned += alloc[c];
  }
  while (assigned < take) {
    // Larger remainder first; ties go to the larger class, then class 0.
    int c = 0;
    if (rem[1] > rem[0] + 1e-12 ||
        (std::fabs(rem[1] - rem[0]) <= 1e-12 && counts[1] > counts[0])) {
      c = 1;
    }
    if (alloc[c] >= counts[c]) c = 1 - c;
    ++alloc[c];
    rem[c] -= 1.0;
    ++assigned;
  }
  return alloc;
}

}  // namespace

std::vector<std::size_t> FoldPlan::complement(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f == fold) continue;
    out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

SplitIndices stratified_split(std::span<const int> labels, double test_fraction,
                              std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ParameterError("test_fraction must be in (0, 1)");
  }
  auto classes = by_class(labels);
  if (classes[0].empty() || classes[1].empty()) {
    throw ValidationError("stratified split needs both classes present");
  }
  const std::size_t n = labels.size();
  const auto total = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  auto alloc = allocate({classes[0].size(), classes[1].size()}, total);

  SplitIndices out;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  for (int c = 0; c < 2; ++c) {
    auto idx = classes[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    out.test.insert(out.test.end(), idx.begin(), idx.begin() + static_cast<long>(alloc[c]));
    out.train.insert(out.train.end(), idx.begin() + static_cast<long>(alloc[c]), idx.end());
    if (alloc[c] == 0 || alloc[c] == classes[c].size()) {
      out.warning = "class " + std::to_string(c) + " is absent from the " +
                    (alloc[c] == 0 ? "test" : "train") + " side after rounding";
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<std::size_t> stratified_subsample(std::span<const int> labels, std::size_t count,
                                              std::uint64_t seed) {
  if (count > labels.size()) throw ParameterError("subsample larger than pool");
  auto classes = by_class(labels);
  auto alloc = allocate({classes[0].size(), classes[1].size()}, count);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out;
  for (int c = 0; c < 2; ++c) {
    auto idx = classes[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    out.insert(out.end(), idx.begin(), idx.begin() + static_cast<long>(alloc[c]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

FoldPlan kfold_plan(std::span<const int> labels, std::size_t k, bool stratified,
                    std::uint64_t seed) {
  if (k < 2) throw ParameterError("k must be at least 2");
  if (k > labels.size()) throw ParameterError("k exceeds the number of rows");
  FoldPlan plan;
  plan.stratified = stratified;
  plan.seed = seed;
  plan.folds.resize(k);
  std::mt19937_64 rng(seed);

  std::vector<std::size_t> order;
  if (stratified) {
    auto classes = by_class(labels);
    for (int c = 0; c < 2; ++c) {
      if (!classes[c].empty() && classes[c].size() < k) {
        throw ValidationError("stratified " + std::to_string(k) + "-fold needs at least " +
                              std::to_string(k) + " rows of class " + std::to_string(c) +
                              ", found " + std::to_string(classes[c].size()));
      }
      std::shuffle(classes[c].begin(), classes[c].end(), rng);
      order.insert(order.end(), classes[c].begin(), classes[c].end());
    }
  } else {
    order.resize(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
  }
  // Dealing round-robin keeps fold sizes and per-class counts within one of each other.
  for (std::size_t i = 0; i < order.size(); ++i) plan.folds[i % k].push_back(order[i]);
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

namespace {

struct ClassSplit {
  std::vector<std::size_t> minority;
  std::vector<std::size_t> majority;
  int minority_label = 1;
};

ClassSplit split_classes(std::span<const int> y) {
  auto classes = by_class(y);
  if (classes[0].empty() || classes[1].empty()) {
    throw ValidationError("resampling needs both classes present");
  }
  ClassSplit s;
  s.minority_label = classes[1].size() <= classes[0].size() ? 1 : 0;
  s.minority = classes[s.minority_label];
  s.majority = classes[1 - s.minority_label];
  return s;
}

void push(Resampled& out, const Matrix& X, std::span<const int> y, std::size_t i) {
  out.X.append_row(X.row(i));
  out.y.push_back(y[i]);
  out.source.push_back(static_cast<long>(i));
  out.parent.push_back(static_cast<long>(i));
}

Resampled empty_like(const Matrix& X) {
  Resampled out;
  out.X = Matrix(0, X.cols());
  return out;
}

}  // namespace

Resampled undersample(const Matrix& X, std::span<const int> y, std::uint64_t seed) {
  auto s = split_classes(y);
  std::mt19937_64 rng(seed);
  auto majority = s.majority;
  std::shuffle(majority.begin(), majority.end(), rng);
  std::vector<std::size_t> keep(majority.begin(),
                                majority.begin() + static_cast<long>(s.minority.size()));
  Resampled out = empty_like(X);
  out.discarded.assign(majority.begin() + static_cast<long>(s.minority.size()), majority.end());
  std::sort(out.discarded.begin(), out.discarded.end());
  keep.insert(keep.end(), s.minority.begin(), s.minority.end());
  std::sort(keep.begin(), keep.end());
  for (auto i : keep) push(out, X, y, i);
  return out;
}

Resampled oversample(const Matrix& X, std::span<const int> y, std::uint64_t seed) {
  auto s = split_classes(y);
  std::mt19937_64 rng(seed);
  Resampled out = empty_like(X);
  for (std::size_t i = 0; i < y.size(); ++i) push(out, X, y, i);
  std::uniform_int_distribution<std::size_t> pick(0, s.minority.size() - 1);
  for (std::size_t n = s.minority.size(); n < s.majority.size(); ++n) {
    push(out, X, y, s.minority[pick(rng)]);
  }
  return out;
}

Resampled smote(const Matrix& X, std::span<const int> y, std::size_t k_neighbors,
                std::uint64_t seed) {
  auto s = split_classes(y);
  const std::size_t m = s.minority.size();
  if (k_neighbors < 1 || m <= k_neighbors) {
    throw ParameterError("smote: minority count (" + std::to_string(m) +
                         ") must exceed k_neighbors (" + std::to_string(k_neighbors) + ")");
  }
  const std::size_t d = X.cols();

  std::vector<std::vector<std::size_t>> neighbors(m);
  parallel_for(m, [&](std::size_t a) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(m - 1);
    auto xa = X.row(s.minority[a]);
    for (std::size_t b = 0; b < m; ++b) {
      if (b == a) continue;
      auto xb = X.row(s.minority[b]);
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += (xa[j] - xb[j]) * (xa[j] - xb[j]);
      dist.emplace_back(acc, b);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k_neighbors), dist.end());
    for (std::size_t t = 0; t < k_neighbors; ++t) neighbors[a].push_back(dist[t].second);
  });

  Resampled out = empty_like(X);
  for (std::size_t i = 0; i < y.size(); ++i) push(out, X, y, i);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_row(0, m - 1);
  std::uniform_int_distribution<std::size_t> pick_nn(0, k_neighbors - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> synth(d);
  for (std::size_t n = m; n < s.majority.size(); ++n) {
    std::size_t a = pick_row(rng);
    std::size_t b = neighbors[a][pick_nn(rng)];
    double u = unit(rng);
    auto xa = X.row(s.minority[a]);
    auto xb = X.row(s.minority[b]);
    for (std::size_t j = 0; j < d; ++j) synth[j] = xa[j] + u * (xb[j] - xa[j]);
    out.X.append_row(synth);
    out.y.push_back(s.minority_label);
    out.source.push_back(-1);
    out.parent.push_back(static_cast<long>(s.minority[a]));
  }
  return out;
}

}  // namespace amlrisk::sampling
