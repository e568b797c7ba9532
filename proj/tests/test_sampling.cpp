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

#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "amlrisk/sampling.hpp"

namespace amlrisk::sampling {
namespace {

Labels make_labels(std::size_t zeros, std::size_t ones) {
  Labels y(zeros, 0);
  y.insert(y.end(), ones, 1);
  return y;
}

Matrix index_matrix(std::size_t n) {
  Matrix X(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = static_cast<double>(i);
    X(i, 1) = static_cast<double>(i * i % 7);
  }
  return X;
}

std::size_t count(const Labels& y, int v) { return static_cast<std::size_t>(std::count(y.begin(), y.end(), v)); }

TEST(StratifiedSplit, ExactProportions) {
  const auto y = make_labels(180, 20);
  const auto s = stratified_split(y, 0.25, 1);
  ASSERT_EQ(s.test.size(), 50u);
  std::size_t minority = 0;
  for (auto i : s.test) minority += y[i];
  EXPECT_EQ(minority, 5u);
  std::vector<std::size_t> all(s.train);
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(200);
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(all, expect);
  EXPECT_TRUE(s.warning.empty());
}

TEST(StratifiedSplit, Deterministic) {
  const auto y = make_labels(50, 10);
  EXPECT_EQ(stratified_split(y, 0.3, 9).test, stratified_split(y, 0.3, 9).test);
  EXPECT_NE(stratified_split(y, 0.3, 9).test, stratified_split(y, 0.3, 10).test);
}

TEST(StratifiedSplit, DegenerateRoundingWarns) {
  const auto y = make_labels(2, 2);
  const auto s = stratified_split(y, 0.25, 1);
  EXPECT_EQ(s.test.size(), 1u);
  EXPECT_FALSE(s.warning.empty());
}

TEST(StratifiedSplit, Errors) {
  EXPECT_THROW(stratified_split(make_labels(10, 0), 0.25, 1), ValidationError);
  EXPECT_THROW(stratified_split(make_labels(10, 2), 0.0, 1), ParameterError);
  EXPECT_THROW(stratified_split(make_labels(10, 2), 1.0, 1), ParameterError);
}

TEST(StratifiedSubsample, ExactCount) {
  const auto y = make_labels(90, 10);
  const auto s = stratified_subsample(y, 20, 4);
  EXPECT_EQ(s.size(), 20u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  std::size_t ones = 0;
  for (auto i : s) ones += y[i];
  EXPECT_EQ(ones, 2u);
}

TEST(KFold, SmallPartition) {
  const auto y = make_labels(5, 5);
  const auto plan = kfold_plan(y, 5, false, 3);
  ASSERT_EQ(plan.k(), 5u);
  std::set<std::size_t> seen;
  for (const auto& f : plan.folds) {
    EXPECT_EQ(f.size(), 2u);
    for (auto i : f) EXPECT_TRUE(seen.insert(i).second);
  }
  EXPECT_EQ(seen.size(), 10u);
  EXPECT_EQ(plan.complement(0).size(), 8u);
}

TEST(KFold, StratifiedPreconditions) {
  EXPECT_THROW(kfold_plan(make_labels(97, 3), 10, true, 1), ValidationError);
  EXPECT_THROW(kfold_plan(make_labels(5, 5), 1, false, 1), ParameterError);
  EXPECT_NO_THROW(kfold_plan(make_labels(97, 3), 10, false, 1));
}

TEST(Undersample, BalancesAtMinority) {
  const auto y = make_labels(970, 30);
  const auto X = index_matrix(y.size());
  const auto r = undersample(X, y, 5);
  EXPECT_EQ(count(r.y, 0), 30u);
  EXPECT_EQ(count(r.y, 1), 30u);
  EXPECT_EQ(r.discarded.size(), 940u);
  std::set<long> src(r.source.begin(), r.source.end());
  EXPECT_EQ(src.size(), 60u);
  for (std::size_t i = 970; i < 1000; ++i) EXPECT_TRUE(src.count(static_cast<long>(i)));
  for (std::size_t i = 0; i < r.X.rows(); ++i) EXPECT_EQ(r.X(i, 0), static_cast<double>(r.source[i]));
  EXPECT_EQ(undersample(X, y, 5).source, r.source);
}

TEST(Undersample, BalancedInputIsPermutation) {
  const auto y = make_labels(10, 10);
  const auto r = undersample(index_matrix(20), y, 2);
  std::vector<long> src = r.source;
  std::sort(src.begin(), src.end());
  std::vector<long> all(20);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(src, all);
  EXPECT_TRUE(r.discarded.empty());
}

TEST(Oversample, CopiesMinorityRows) {
  const auto y = make_labels(970, 30);
  const auto X = index_matrix(y.size());
  const auto r = oversample(X, y, 5);
  EXPECT_EQ(count(r.y, 0), 970u);
  EXPECT_EQ(count(r.y, 1), 970u);
  for (std::size_t i = 0; i < r.X.rows(); ++i) {
    ASSERT_GE(r.source[i], 0);
    const auto s = static_cast<std::size_t>(r.source[i]);
    EXPECT_EQ(r.y[i], y[s]);
    EXPECT_EQ(r.X(i, 0), X(s, 0));
    EXPECT_EQ(r.X(i, 1), X(s, 1));
  }
  EXPECT_EQ(oversample(X, y, 5).source, r.source);
}

TEST(Smote, DiagonalSegment) {
  Matrix X(6, 2);
  const Labels y{0, 0, 0, 0, 1, 1};
  X(4, 0) = 0;
  X(4, 1) = 0;
  X(5, 0) = 1;
  X(5, 1) = 1;
  for (std::size_t i = 0; i < 4; ++i) X(i, 0) = 5.0 + static_cast<double>(i);
  const auto r = smote(X, y, 1, 7);
  EXPECT_EQ(count(r.y, 1), 4u);
  for (std::size_t i = 0; i < r.X.rows(); ++i) {
    if (r.source[i] >= 0) continue;
    EXPECT_EQ(r.y[i], 1);
    EXPECT_NEAR(r.X(i, 0), r.X(i, 1), 1e-12);
    EXPECT_GE(r.X(i, 0), -1e-12);
    EXPECT_LE(r.X(i, 0), 1 + 1e-12);
  }
}

TEST(Smote, IdenticalMinorityPoints) {
  Matrix X(5, 2, 0.0);
  const Labels y{0, 0, 0, 1, 1};
  X(3, 0) = X(4, 0) = 2.5;
  X(3, 1) = X(4, 1) = -1.0;
  const auto r = smote(X, y, 1, 1);
  for (std::size_t i = 0; i < r.X.rows(); ++i) {
    if (r.source[i] < 0) {
      EXPECT_EQ(r.X(i, 0), 2.5);
      EXPECT_EQ(r.X(i, 1), -1.0);
    }
  }
}

TEST(Smote, RequiresEnoughMinority) {
  Matrix X(4, 1, 0.0);
  const Labels y{0, 0, 1, 1};
  EXPECT_THROW(smote(X, y, 2, 1), ParameterError);
  EXPECT_THROW(smote(X, y, 0, 1), ParameterError);
}

}  // namespace
}  // namespace amlrisk::sampling
