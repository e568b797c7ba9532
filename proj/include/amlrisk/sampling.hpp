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
#include <vector>

#include "amlrisk/common.hpp"

namespace amlrisk::sampling {

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  // Non-empty when rounding left some class absent from one side.
  std::string warning;
};

struct FoldPlan {
  std::vector<std::vector<std::size_t>> folds;
  bool stratified = false;
  std::uint64_t seed = 0;

  std::size_t k() const noexcept { return folds.size(); }
  // All indices not in `fold`, ascending.
  std::vector<std::size_t> complement(std::size_t fold) const;
};

// Output of the imbalance resamplers. `source[i]` is the input row the i-th output
// row came from, or -1 for a synthetic SMOTE row (whose `parent` holds the seed row).
struct Resampled {
  Matrix X;
  Labels y;
  std::vector<long> source;
  std::vector<long> parent;
  std::vector<std::size_t> discarded;  // input rows dropped by undersampling
};

/// Stratified holdout. The test set holds round(n * test_fraction) rows, split
/// across classes by largest remainder of class_count * test_fraction.
SplitIndices stratified_split(std::span<const int> labels, double test_fraction,
                              std::uint64_t seed);

/// Stratified subset of exactly `count` indices (ascending).
std::vector<std::size_t> stratified_subsample(std::span<const int> labels, std::size_t count,
                                              std::uint64_t seed);

FoldPlan kfold_plan(std::span<const int> labels, std::size_t k, bool stratified,
                    std::uint64_t seed);

/// Drops majority rows uniformly without replacement down to the minority count.
Resampled undersample(const Matrix& X, std::span<const int> y, std::uint64_t seed);

/// Duplicates minority rows (uniform, with replacement) up to the majority count.
Resampled oversample(const Matrix& X, std::span<const int> y, std::uint64_t seed);

/// SMOTE: adds majority_count - minority_count synthetic minority rows, each
/// x + u * (neighbor - x) for a random minority row x, one of its k nearest
/// minority neighbours (Euclidean) and u ~ U[0, 1].
Resampled smote(const Matrix& X, std::span<const int> y, std::size_t k_neighbors,
                std::uint64_t seed);

}  // namespace amlrisk::sampling
