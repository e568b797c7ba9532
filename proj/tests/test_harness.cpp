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

#include <fstream>
#include <set>

#include "amlrisk/datagen.hpp"
#include "amlrisk/harness.hpp"
#include "support.hpp"

namespace amlrisk::harness {
namespace {

encode::RawData small_raw(std::size_t n, double majority, std::uint64_t seed = 7, bool signal = true) {
  datagen::GenConfig c;
  c.n_customers = n;
  c.majority_ratio = majority;
  c.seed = seed;
  if (!signal) c.signal_strengths = datagen::zero_signals();
  return encode::load_raw(datagen::generate_dataset(c), store::FeatureSpec{store::FeatureVersion::V2, {}});
}

PipelineSpec dt_spec(Imbalance imb = Imbalance::None) {
  PipelineSpec s;
  s.features = store::FeatureSpec{store::FeatureVersion::V2, {}};
  s.encoding = encode::EncodingMode::Label;
  s.imbalance = imb;
  trees::DtParams p;
  p.max_depth = 4;
  s.learner = p;
  s.seed = 3;
  return s;
}

TEST(Grid, TableGridsHaveEighteenPoints) {
  EXPECT_EQ(rf_table_grid().size(), 18u);
  EXPECT_EQ(xgb_table_grid().size(), 18u);
  EXPECT_EQ(lgbm_table_grid().size(), 18u);
  const auto pts = rf_table_grid().points();
  ASSERT_EQ(pts.size(), 18u);
  std::set<std::string> unique;
  for (const auto& p : pts) unique.insert(p.dump());
  EXPECT_EQ(unique.size(), 18u);
  EXPECT_EQ(pts[0], (json{{"n_estimators", 50}, {"max_features", "auto"}, {"max_depth", -1}}));
  EXPECT_EQ(pts[1]["max_depth"], 5);
  EXPECT_EQ(GridSpec{}.size(), 1u);
}

TEST(Grid, JsonRoundTrip) {
  const auto g = xgb_table_grid();
  const auto back = GridSpec::from_json(g.to_json());
  EXPECT_EQ(back.points(), g.points());
  EXPECT_THROW(GridSpec::from_json(json{{"max_depth", json::array()}}), ConfigError);
}

TEST(PipelineSpecJson, RoundTripAndUnknownField) {
  auto s = dt_spec(Imbalance::SmoteDev);
  s.grid = rf_table_grid();
  const auto back = PipelineSpec::from_json(s.to_json());
  EXPECT_EQ(back.to_json(), s.to_json());
  EXPECT_EQ(back.fingerprint(), s.fingerprint());
  EXPECT_THROW(PipelineSpec::from_json(json{{"learnr", "dt"}}), ConfigError);
  EXPECT_THROW(imbalance_from_string("tomek"), ConfigError);
}

TEST(MonteCarlo, ThirtyRunsLeakFree) {
  const auto raw = small_raw(600, 0.9);
  MonteCarloOptions opt;
  const auto r = monte_carlo_eval(dt_spec(Imbalance::UndersampleDev), raw, opt);
  ASSERT_EQ(r.aurocs.size(), 30u);
  for (double a : r.aurocs) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
  EXPECT_EQ(r.fits, 30u);
  EXPECT_TRUE(r.leak_free());
  EXPECT_FALSE(r.leakage);
  for (const auto& a : r.audit) {
    EXPECT_EQ(a.test_rows.size(), 150u);
    EXPECT_EQ(a.fit_rows.size(), 450u);
  }
  EXPECT_EQ(std::set<std::uint64_t>(r.run_seeds.begin(), r.run_seeds.end()).size(), 30u);
}

TEST(MonteCarlo, DeterministicReport) {
  const auto raw = small_raw(400, 0.9);
  MonteCarloOptions opt;
  opt.repeats = 5;
  const auto a = monte_carlo_eval(dt_spec(), raw, opt);
  const auto b = monte_carlo_eval(dt_spec(), raw, opt);
  EXPECT_EQ(a.to_json(false).dump(), b.to_json(false).dump());
}

TEST(NestedKFold, FitCountWithEighteenPointGrid) {
  const auto raw = small_raw(300, 0.8);
  auto spec = dt_spec();
  std::vector<json> depths;
  for (int d = 1; d <= 18; ++d) depths.push_back(d);
  spec.grid.axes = {{"max_depth", depths}};
  const auto r = nested_kfold_eval(spec, raw, 10, 10);
  EXPECT_EQ(r.aurocs.size(), 10u);
  EXPECT_EQ(r.inner_fits, 1800u);
  EXPECT_EQ(r.fits, 1810u);
  EXPECT_TRUE(r.leak_free());
  std::set<std::size_t> tested;
  for (const auto& a : r.audit) {
    for (auto i : a.test_rows) EXPECT_TRUE(tested.insert(i).second);
  }
  EXPECT_EQ(tested.size(), raw.size());
  for (const auto& p : r.chosen_params) EXPECT_TRUE(p.contains("max_depth"));
}

TEST(GridSearch, SharedSplitsAndFirstBestWins) {
  const auto raw = small_raw(300, 0.8);
  auto spec = dt_spec();
  spec.grid.axes = {{"max_depth", {2, 2, 3}}};
  std::vector<std::size_t> dev(raw.size());
  std::iota(dev.begin(), dev.end(), 0);
  const auto g = grid_search(spec, raw, dev, {InnerProtocol::Kind::KFold, 5, 0, 0.0}, 1);
  ASSERT_EQ(g.leaderboard.size(), 3u);
  EXPECT_EQ(g.fits, 15u);
  EXPECT_EQ(g.leaderboard[0].scores, g.leaderboard[1].scores);
  EXPECT_NE(g.best, 1u);
}

TEST(BalanceUpfront, FlaggedAsLeakage) {
  const auto raw = small_raw(400, 0.9);
  MonteCarloOptions opt;
  opt.repeats = 3;
  const auto r = monte_carlo_eval(dt_spec(Imbalance::BalanceUpfront), raw, opt);
  EXPECT_TRUE(r.leakage);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings[0].find("leakage"), std::string::npos);
  EXPECT_TRUE(r.to_json()["leakage"].get<bool>());
  // Only the balanced subset (40 + 40 rows) takes part.
  EXPECT_EQ(r.audit[0].fit_rows.size() + r.audit[0].test_rows.size(), 80u);
}

TEST(RunOnce, ResamplingTouchesTrainingRowsOnly) {
  const auto raw = small_raw(400, 0.9);
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < raw.size(); ++i) (i % 4 ? train : test).push_back(i);
  for (auto imb : {Imbalance::UndersampleDev, Imbalance::OversampleDev, Imbalance::SmoteDev,
                   Imbalance::ClassWeight}) {
    auto spec = dt_spec(imb);
    const auto out = run_once(spec, raw, train, test, spec.learner, 5);
    EXPECT_TRUE(out.audit.disjoint());
    EXPECT_EQ(out.test_scores.size(), test.size());
    for (auto d : out.discarded) EXPECT_EQ(d % 4 == 0, false);
  }
}

TEST(ZeroSignal, AurocNearHalf) {
  const auto raw = small_raw(3000, 0.8, 11, false);
  MonteCarloOptions opt;
  opt.repeats = 10;
  const auto r = monte_carlo_eval(dt_spec(Imbalance::UndersampleDev), raw, opt);
  EXPECT_NEAR(r.summary.mean, 0.5, 0.03);
}

TEST(SizeSensitivity, PointsAndErrors) {
  const auto raw = small_raw(1200, 0.9);
  const auto rep = size_sensitivity(dt_spec(Imbalance::UndersampleDev), raw, {100, 400, 0}, 3);
  ASSERT_EQ(rep.points.size(), 3u);
  EXPECT_EQ(rep.holdout_rows, 300u);
  EXPECT_EQ(rep.pool_rows, 900u);
  EXPECT_EQ(rep.points[2].actual, 900u);
  EXPECT_EQ(rep.to_json(false)["points"][2]["size"], "all");
  EXPECT_THROW(size_sensitivity(dt_spec(), raw, {5000}, 3), ParameterError);
}

TEST(MegaTest, SetSizes) {
  const auto raw = small_raw(1000, 0.9);
  const auto m = mega_test(dt_spec(Imbalance::UndersampleDev), raw, 4, 0.1);
  ASSERT_EQ(m.standard.aurocs.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(m.standard_sizes[i], 100u);
    // 900 training rows with 90 positives: 720 negatives are discarded.
    EXPECT_EQ(m.mega_sizes[i], 820u);
    EXPECT_TRUE(m.mega.audit[i].disjoint());
  }
  EXPECT_THROW(mega_test(dt_spec(), raw, 4), ParameterError);
}

TEST(Compare, VerdictText) {
  ExperimentReport a, b;
  a.aurocs = {0.60, 0.58, 0.61, 0.59, 0.62};
  b.aurocs = {0.70, 0.69, 0.71, 0.68, 0.72};
  a.seconds = {1, 1, 1, 1, 1};
  b.seconds = {2, 2, 2, 2, 2};
  const auto v = compare(a, b);
  EXPECT_NEAR(v.difference, 0.1, 1e-12);
  EXPECT_TRUE(v.significant);
  EXPECT_DOUBLE_EQ(v.runtime_ratio, 2.0);
  EXPECT_NE(v.text.find("significant"), std::string::npos);
  const auto same = compare(a, a);
  EXPECT_FALSE(same.significant);
  EXPECT_EQ(same.test.p_value, 1.0);
  EXPECT_THROW(compare(ExperimentReport{}, a), ValidationError);
}

TEST(Report, JsonRoundTripAndLeaderboard) {
  const auto raw = small_raw(400, 0.9);
  MonteCarloOptions opt;
  opt.repeats = 4;
  const auto r = monte_carlo_eval(dt_spec(), raw, opt);
  const auto dir = testing::temp_dir("harness_report");
  write_json(dir / "r.json", r.to_json());
  const auto back = ExperimentReport::from_json(read_json(dir / "r.json"));
  EXPECT_EQ(back.aurocs, r.aurocs);
  EXPECT_EQ(back.run_seeds, r.run_seeds);
  EXPECT_EQ(back.summary.mean, r.summary.mean);
  append_leaderboard(dir / "lb.csv", r, "a");
  append_leaderboard(dir / "lb.csv", back, "b");
  std::ifstream in(dir / "lb.csv");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 3u);
  EXPECT_THROW(ExperimentReport::from_json(json{{"protocol", "x"}}), ValidationError);
  EXPECT_THROW(read_json(dir / "missing.json"), IoError);
}

}  // namespace
}  // namespace amlrisk::harness
