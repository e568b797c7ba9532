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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

#include "amlrisk/datagen.hpp"
#include "amlrisk/explain.hpp"
#include "amlrisk/harness.hpp"
#include "amlrisk/metrics.hpp"
#include "amlrisk/sampling.hpp"
#include "amlrisk/server.hpp"
#include "amlrisk/service.hpp"
#include "amlrisk/store.hpp"
#include "amlrisk/trees.hpp"
#include "support.hpp"

namespace {

using namespace amlrisk;
using harness::Imbalance;
using harness::PipelineSpec;
using nlohmann::json;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Detail {
 public:
  template <typename T>
  Detail& operator<<(const T& v) {
    out_ << v;
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Shared fixtures

constexpr std::size_t kBenchmarkSize = 20000;

SyntheticDataset benchmark_dataset(std::uint64_t seed) {
  datagen::GenConfig c;
  c.n_customers = kBenchmarkSize;
  c.majority_ratio = 0.972;
  c.seed = seed;
  return datagen::generate_dataset(c);
}

trees::GbdtParams final_gbdt() {
  return std::get<trees::GbdtParams>(service::FinalSpec::deployment_default().pipeline.learner);
}

PipelineSpec gbdt_pipeline(std::optional<store::FeatureSpec> features) {
  PipelineSpec s;
  s.features = std::move(features);
  s.encoding = encode::EncodingMode::OneHot;
  s.imbalance = Imbalance::UndersampleDev;
  s.learner = final_gbdt();
  s.seed = 7;
  return s;
}

const store::FeatureSpec kV2{store::FeatureVersion::V2, {}};

// ---------------------------------------------------------------------------
// Oracles

double auroc_pairs(const std::vector<double>& s, const Labels& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

Outcome auroc_oracle() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int it = 0; it < 200; ++it) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 30)(rng);
    std::vector<double> s(n);
    Labels y(n);
    const bool coarse = it % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      s[i] = coarse ? std::floor(u * 5.0) / 5.0 : u;
      y[i] = std::bernoulli_distribution(0.4)(rng);
    }
    y[0] = 0;
    y[1] = 1;
    worst = std::max(worst, std::fabs(metrics::auroc(s, y) - auroc_pairs(s, y)));
  }
  return {worst <= 1e-12, (Detail() << "200 instances, max |diff| = " << worst).str()};
}

Outcome gbdt_hand_check() {
  trees::GbdtParams p;
  p.n_estimators = 1;
  p.max_depth = 1;
  p.reg_lambda = 0;
  p.learning_rate = 1.0;
  p.min_child_weight = 0;
  const Matrix X(2, 1, std::vector<double>{0, 1});
  const auto m = trees::fit_gbdt(X, Labels{0, 1}, p);
  const auto pr = trees::predict_proba(m, X);
  const bool example = std::fabs(pr[0] - 0.1192) <= 1e-4 && std::fabs(pr[1] - 0.8808) <= 1e-4;

  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0, 1);
  Matrix D(1000, 5);
  Labels y(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    y[i] = i % 5 == 0;
    for (std::size_t c = 0; c < 5; ++c) D(i, c) = z(rng) + (c < 2 && y[i] ? 0.8 : 0.0);
  }
  trees::GbdtParams q = final_gbdt();
  q.n_estimators = 200;
  const auto g = trees::fit_gbdt(D, y, q);
  double worst_rise = 0.0;
  for (std::size_t i = 1; i < g.train_loss.size(); ++i) {
    worst_rise = std::max(worst_rise, g.train_loss[i] - g.train_loss[i - 1]);
  }
  const bool monotone = g.train_loss.size() == 201 && worst_rise <= 1e-9;
  return {example && monotone, (Detail() << "predictions [" << pr[0] << ", " << pr[1]
                                         << "]; largest logloss rise over 200 trees " << worst_rise)
                                   .str()};
}

Outcome shap_correctness() {
  std::mt19937_64 rng(202);
  double worst_oracle = 0.0;
  for (int it = 0; it < 100; ++it) {
    const std::size_t d = 1 + it % 4;
    const auto kind = it % 3 == 0 ? trees::ModelKind::GBDT : trees::ModelKind::DT;
    const auto m = testing::random_ensemble(rng, d, 1 + it % 3, 1, kind);
    const auto row = testing::random_row(rng, d);
    const auto a = explain::tree_shap(m, row);
    const auto b = explain::brute_force_shap(m, row);
    for (std::size_t f = 0; f < d; ++f) {
      worst_oracle = std::max(worst_oracle, std::fabs(a.attributions[f] - b.attributions[f]));
    }
    worst_oracle = std::max(worst_oracle, std::fabs(a.base_value - b.base_value));
  }
  double worst_local = 0.0;
  bool dummy_zero = true;
  for (int it = 0; it < 100; ++it) {
    const auto kind = it % 2 ? trees::ModelKind::GBDT : trees::ModelKind::RF;
    auto m = testing::random_ensemble(rng, 6, 5, 10, kind);
    m.n_features = 8;  // columns 6 and 7 never appear in a split
    const auto row = testing::random_row(rng, 8);
    const auto e = explain::tree_shap(m, row);
    const double total = std::accumulate(e.attributions.begin(), e.attributions.end(), e.base_value);
    worst_local = std::max(worst_local, std::fabs(total - trees::predict_margin_row(m, row)));
    dummy_zero = dummy_zero && e.attributions[6] == 0.0 && e.attributions[7] == 0.0;
  }
  return {worst_oracle <= 1e-9 && worst_local <= 1e-6 && dummy_zero,
          (Detail() << "oracle max diff " << worst_oracle << " over 100 trees; local accuracy max "
                    << worst_local << " over 100 pairs; dummy features zero: "
                    << (dummy_zero ? "yes" : "no"))
              .str()};
}

bool check_plan(const sampling::FoldPlan& plan, const Labels& y, std::size_t k, bool stratified) {
  const std::size_t n = y.size();
  if (plan.k() != k) return false;
  std::vector<int> seen(n, 0);
  std::size_t lo = n, hi = 0;
  const double pos_total = static_cast<double>(std::count(y.begin(), y.end(), 1));
  for (const auto& f : plan.folds) {
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
    double pos = 0.0;
    for (auto i : f) {
      if (i >= n || seen[i]++) return false;
      pos += y[i];
    }
    if (stratified && std::fabs(pos - pos_total * static_cast<double>(f.size()) / static_cast<double>(n)) > 1.0) {
      return false;
    }
  }
  return hi - lo <= 1 && std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; });
}

Outcome sampling_properties() {
  std::size_t plans = 0;
  bool kfold_ok = true;
  for (std::size_t n = 20; n <= 200; ++n) {
    Labels y(n, 0);
    const std::size_t pos = std::max<std::size_t>(10, n / 4);
    std::fill(y.begin(), y.begin() + static_cast<long>(pos), 1);
    std::mt19937_64 shuffle_rng(n);
    std::shuffle(y.begin(), y.end(), shuffle_rng);
    for (std::size_t k : {2u, 5u, 10u}) {
      for (bool strat : {false, true}) {
        const auto plan = sampling::kfold_plan(y, k, strat, n * 31 + k);
        kfold_ok = kfold_ok && check_plan(plan, y, k, strat);
        ++plans;
      }
    }
  }

  std::mt19937_64 rng(303);
  std::normal_distribution<double> z(0, 1);
  double worst_segment = 0.0;
  bool smote_count = true;
  bool balance = true;
  for (int it = 0; it < 20; ++it) {
    const std::size_t n = 120, d = 3, k = 5;
    Matrix X(n, d);
    Labels y(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i % 6 == 0;
      for (std::size_t c = 0; c < d; ++c) X(i, c) = z(rng) + (y[i] ? 2.0 : 0.0);
    }
    std::vector<std::size_t> minority;
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i]) minority.push_back(i);
    }
    auto dist = [&](std::size_t a, std::size_t b) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += (X(a, c) - X(b, c)) * (X(a, c) - X(b, c));
      return std::sqrt(s);
    };
    const auto r = sampling::smote(X, y, k, 1000 + it);
    const std::size_t majority = n - minority.size();
    smote_count = smote_count && static_cast<std::size_t>(std::count(r.y.begin(), r.y.end(), 1)) == majority &&
                  static_cast<std::size_t>(std::count(r.y.begin(), r.y.end(), 0)) == majority;
    for (std::size_t i = 0; i < r.X.rows(); ++i) {
      if (r.source[i] >= 0) continue;
      const auto p = static_cast<std::size_t>(r.parent[i]);
      std::vector<std::pair<double, std::size_t>> nn;
      for (auto m : minority) {
        if (m != p) nn.emplace_back(dist(p, m), m);
      }
      std::sort(nn.begin(), nn.end());
      const double kth = nn[k - 1].first;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [dq, q] : nn) {
        if (dq > kth + 1e-12) break;
        // Distance from the synthetic row to the segment parent..q.
        double uu = 0.0, vv = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          uu += (r.X(i, c) - X(p, c)) * (X(q, c) - X(p, c));
          vv += (X(q, c) - X(p, c)) * (X(q, c) - X(p, c));
        }
        const double t = vv > 0 ? uu / vv : 0.0;
        if (t < -1e-9 || t > 1 + 1e-9) continue;
        double off = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double e = r.X(i, c) - (X(p, c) + t * (X(q, c) - X(p, c)));
          off += e * e;
        }
        best = std::min(best, std::sqrt(off));
      }
      worst_segment = std::max(worst_segment, best);
    }
    const auto u = sampling::undersample(X, y, 2000 + it);
    const auto o = sampling::oversample(X, y, 3000 + it);
    const auto ones = [](const Labels& l) { return static_cast<std::size_t>(std::count(l.begin(), l.end(), 1)); };
    balance = balance && ones(u.y) == minority.size() && u.y.size() == 2 * minority.size() &&
              ones(o.y) == majority && o.y.size() == 2 * majority;
  }
  return {kfold_ok && smote_count && balance && worst_segment <= 1e-9,
          (Detail() << plans << " fold plans valid: " << (kfold_ok ? "yes" : "no")
                    << "; SMOTE max off-segment " << worst_segment
                    << "; resampler class counts exact: " << (balance && smote_count ? "yes" : "no"))
              .str()};
}

Outcome t_test_oracle() {
  const auto r = metrics::t_test(std::vector<double>{1, 2, 3}, std::vector<double>{2, 3, 4});
  const std::vector<double> a{0.91, 0.93, 0.92, 0.95};
  const auto same = metrics::t_test(a, a);
  const bool ok = std::fabs(r.t + 1.2247) <= 1e-3 && std::fabs(r.p_value - 0.2878) <= 1e-3 &&
                  same.t == 0.0 && same.p_value == 1.0;
  return {ok, (Detail() << "t = " << r.t << ", p = " << r.p_value << "; identical samples t = " << same.t
                        << ", p = " << same.p_value)
                  .str()};
}

Outcome feature_oracle() {
  std::size_t integer_mismatch = 0;
  double worst_real = 0.0;
  bool names_ok = true;
  bool restriction_ok = true;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto ds = testing::random_toy_dataset(1000 + seed);
    store::Store db(":memory:");
    db.ingest(ds);
    const auto countries = std::vector<std::string>{"CA", "US", "GB", "FR"};
    for (const store::FeatureSpec& spec :
         {store::FeatureSpec{store::FeatureVersion::V1, {}}, kV2,
          store::FeatureSpec{store::FeatureVersion::V3, countries}}) {
      const auto a = db.build_features(spec);
      const auto b = store::features_oracle(ds, spec);
      names_ok = names_ok && a.names == b.names && a.cust_ids == b.cust_ids;
      if (!names_ok) continue;
      for (std::size_t r = 0; r < a.cust_ids.size(); ++r) {
        for (std::size_t c = 0; c < a.names.size(); ++c) {
          const bool real = a.names[c].find("_amt") != std::string::npos ||
                            a.names[c].find("_net") != std::string::npos;
          if (real) worst_real = std::max(worst_real, std::fabs(a.values(r, c) - b.values(r, c)));
          else if (a.values(r, c) != b.values(r, c)) ++integer_mismatch;
        }
      }
    }
    const auto v1 = db.build_features({store::FeatureVersion::V1, {}});
    const auto v2 = db.build_features(kV2);
    for (std::size_t c = 0; c < v1.names.size(); ++c) {
      const auto at = std::find(v2.names.begin(), v2.names.end(), v1.names[c]);
      if (at == v2.names.end()) {
        restriction_ok = false;
        continue;
      }
      const auto c2 = static_cast<std::size_t>(at - v2.names.begin());
      for (std::size_t r = 0; r < v1.cust_ids.size(); ++r) {
        restriction_ok = restriction_ok && v1.values(r, c) == v2.values(r, c2);
      }
    }
  }
  return {names_ok && integer_mismatch == 0 && worst_real <= 1e-9 && restriction_ok,
          (Detail() << "50 toy stores x V1/V2/V3: integer mismatches " << integer_mismatch
                    << ", real max diff " << worst_real << "; V2 restricted to V1 equals V1: "
                    << (restriction_ok ? "yes" : "no"))
              .str()};
}

// ---------------------------------------------------------------------------
// Synthetic trends

Outcome imbalance_trend() {
  std::size_t wins = 0;
  double min_accuracy = 1.0;
  std::ostringstream gaps;
  for (std::uint64_t family = 0; family < 10; ++family) {
    const auto raw = encode::load_raw(benchmark_dataset(100 + family), kV2);
    PipelineSpec spec;
    spec.features = kV2;
    spec.encoding = encode::EncodingMode::Label;
    spec.learner = trees::DtParams{};
    spec.seed = 500 + family;
    spec.imbalance = Imbalance::None;
    const auto plain = harness::monte_carlo_eval(spec, raw);
    spec.imbalance = Imbalance::UndersampleDev;
    const auto under = harness::monte_carlo_eval(spec, raw);
    const double gap = under.summary.mean - plain.summary.mean;
    if (gap >= 0.02) ++wins;
    gaps << (family ? ", " : "") << std::round(gap * 1000) / 1000;

    // Accuracy of the unbalanced tree at the 0.5 threshold on a stratified holdout.
    spec.imbalance = Imbalance::None;
    const auto split = sampling::stratified_split(raw.labels, 0.25, derive_seed(spec.seed, "accuracy", 0));
    auto train = split.train, test = split.test;
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    const auto out = harness::run_once(spec, raw, train, test, spec.learner, spec.seed);
    Labels y;
    for (auto i : test) y.push_back(raw.labels[i]);
    min_accuracy = std::min(min_accuracy, metrics::classification_report(out.test_scores, y).accuracy);
  }
  return {wins >= 8 && min_accuracy >= 0.95,
          (Detail() << "undersampling gain >= 0.02 in " << wins << "/10 families (gains " << gaps.str()
                    << "); lowest unbalanced accuracy " << min_accuracy)
              .str()};
}

Outcome feature_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ds = benchmark_dataset(7);
  const auto v2 = harness::monte_carlo_eval(gbdt_pipeline(kV2), encode::load_raw(ds, kV2));
  const auto kyc = harness::monte_carlo_eval(gbdt_pipeline(std::nullopt), encode::load_raw(ds, std::nullopt));
  const auto v = harness::compare(kyc, v2);
  const double secs = seconds_since(t0);
  return {v.difference >= 0.05 && v.significant && v2.summary.mean >= 0.93 && secs <= 300.0,
          (Detail() << "V2 " << v2.summary.format() << " vs KYC-only " << kyc.summary.format()
                    << ", difference " << v.difference << ", p = " << v.test.p_value << ", " << secs
                    << " s")
              .str()};
}

Outcome size_plateau() {
  const auto raw = encode::load_raw(benchmark_dataset(7), kV2);
  const auto rep = harness::size_sensitivity(gbdt_pipeline(kV2), raw, harness::default_train_sizes(), 10);
  double at5000 = 0.0, full = 0.0;
  for (const auto& p : rep.points) {
    if (p.size == 5000) at5000 = p.summary.mean;
    if (p.size == 0) full = p.summary.mean;
  }
  return {std::fabs(full - at5000) <= 0.01,
          (Detail() << "AUROC at 5000 rows " << at5000 << ", at " << rep.pool_rows << " rows " << full).str()};
}

Outcome mega() {
  const auto raw = encode::load_raw(benchmark_dataset(7), kV2);
  const auto m = harness::mega_test(gbdt_pipeline(kV2), raw, 30, 0.1);
  const double diff = std::fabs(m.standard.summary.mean - m.mega.summary.mean);
  return {diff < 0.02 && !m.test.significant,
          (Detail() << "standard " << m.standard.summary.format() << " (" << m.standard_sizes[0]
                    << " rows) vs mega " << m.mega.summary.format() << " (" << m.mega_sizes[0]
                    << " rows), p = " << m.test.p_value)
              .str()};
}

Outcome importance_ranking() {
  std::size_t first = 0;
  std::ostringstream tops;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto raw = encode::load_raw(benchmark_dataset(200 + seed), kV2);
    auto spec = gbdt_pipeline(kV2);
    spec.seed = 900 + seed;
    const auto split = sampling::stratified_split(raw.labels, 0.25, derive_seed(spec.seed, "importance", 0));
    auto train = split.train, test = split.test;
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    const auto out = harness::run_once(spec, raw, train, test, spec.learner, spec.seed);
    const auto design = encode::assemble(raw, out.encoder, test);
    const auto ranking = explain::global_importance(out.model, design.X, design.names);
    if (ranking.front().feature == "wire_total_cnt") ++first;
    tops << (seed ? ", " : "") << ranking.front().feature;
  }
  return {first >= 9, (Detail() << "wire_total_cnt ranked first in " << first << "/10 seeds (" << tops.str() << ")").str()};
}

Outcome protocol_equivalence() {
  const auto raw = encode::load_raw(benchmark_dataset(7), kV2);
  auto spec = gbdt_pipeline(kV2);
  spec.encoding = encode::EncodingMode::Label;
  spec.grid.axes = {{"n_estimators", {50, 100}}};
  const auto t0 = std::chrono::steady_clock::now();
  const auto mc = harness::monte_carlo_eval(spec, raw);
  const double mc_secs = seconds_since(t0);
  const auto t1 = std::chrono::steady_clock::now();
  const auto kf = harness::nested_kfold_eval(spec, raw, 10, 10);
  const double kf_secs = seconds_since(t1);
  const auto v = harness::compare(mc, kf);
  return {std::fabs(v.difference) < 0.02 && !v.significant && kf_secs < mc_secs,
          (Detail() << "Monte Carlo " << mc.summary.format() << " in " << mc_secs << " s (" << mc.fits
                    << " fits) vs nested 10-fold " << kf.summary.format() << " in " << kf_secs << " s ("
                    << kf.fits << " fits), p = " << v.test.p_value)
              .str()};
}

// ---------------------------------------------------------------------------
// Determinism and the service

Outcome determinism() {
  datagen::GenConfig c;
  c.n_customers = 3000;
  c.majority_ratio = 0.95;
  const auto ds = datagen::generate_dataset(c);
  const bool data_same = datagen::generate_dataset(c).kyc == ds.kyc;
  const auto raw = encode::load_raw(ds, kV2);
  auto spec = gbdt_pipeline(kV2);
  spec.learner = [] {
    auto p = final_gbdt();
    p.n_estimators = 50;
    return p;
  }();
  harness::MonteCarloOptions opt;
  opt.repeats = 5;
  const std::string a = harness::monte_carlo_eval(spec, raw, opt).to_json(false).dump();
  set_thread_count(3);
  const std::string b = harness::monte_carlo_eval(spec, raw, opt).to_json(false).dump();
  set_thread_count(0);
  PipelineSpec rf = spec;
  rf.learner = trees::RfParams{20};
  const std::string k1 = harness::nested_kfold_eval(rf, raw, 5, 5).to_json(false).dump();
  const std::string k2 = harness::nested_kfold_eval(rf, raw, 5, 5).to_json(false).dump();
  const bool reports_same = a == b && k1 == k2;

  store::Store s1(":memory:"), s2(":memory:");
  s1.ingest(ds);
  s2.ingest(ds);
  auto fs = service::FinalSpec::deployment_default();
  const auto m1 = service::train_final(s1, fs);
  const auto m2 = service::train_final(s2, fs);
  const bool artifacts_same = service::serialize(m1, false) == service::serialize(m2, false);

  const auto dir = testing::temp_dir("acceptance_artifact");
  service::save_model(m1, dir / "model.json");
  const auto back = service::load_model(dir / "model.json");
  std::vector<std::size_t> rows(1000);
  std::iota(rows.begin(), rows.end(), 0);
  const auto thousand = encode::assemble(raw, back.encoder, rows);
  const auto p1 = trees::predict_proba(m1.model, thousand.X);
  const auto p2 = trees::predict_proba(back.model, thousand.X);
  const bool roundtrip = p1 == p2 && p1.size() == 1000 && service::serialize(back) == service::serialize(m1);
  std::filesystem::remove_all(dir);
  return {data_same && reports_same && artifacts_same && roundtrip,
          (Detail() << "datasets identical: " << data_same << "; reports identical: " << reports_same
                    << "; artifacts identical: " << artifacts_same << "; 1000-row round trip exact: "
                    << roundtrip)
              .str()};
}

Outcome service_parity() {
  datagen::GenConfig c;
  c.n_customers = 10000;
  c.majority_ratio = 0.972;
  store::Store db(":memory:");
  db.ingest(datagen::generate_dataset(c));
  service::ModelService svc(db, service::FinalSpec::deployment_default());
  svc.cml_tick();
  const auto first = svc.active();
  service::ServerOptions opt;
  opt.port = 0;
  service::HttpServer server(svc, opt);
  const int port = server.start();
  httplib::Client client("127.0.0.1", port);

  const auto raw = encode::load_raw(db, first->features);
  const auto design = encode::assemble(raw, first->encoder);
  const auto offline = trees::predict_proba(first->model, design.X);
  std::size_t exact = 0;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t r = i * (raw.size() / 100);
    ids.push_back(raw.kyc[r].cust_id);
    auto res = client.Get("/customers/" + raw.kyc[r].cust_id + "/score");
    if (res && res->status == 200 && json::parse(res->body)["score"].get<double>() == offline[r]) ++exact;
  }

  // Hammer /score while a retrain runs; every reply must match the model it names.
  std::map<std::int64_t, std::shared_ptr<const service::ModelArtifact>> by_version{{first->version_id, first}};
  auto artifact_for = [&](std::int64_t v) -> std::shared_ptr<const service::ModelArtifact> {
    if (auto it = by_version.find(v); it != by_version.end()) return it->second;
    const auto rec = db.model(v);
    if (!rec) return nullptr;
    return by_version[v] = std::make_shared<const service::ModelArtifact>(service::deserialize(rec->artifact));
  };
  std::vector<std::pair<std::string, json>> replies;
  std::atomic<bool> stop{false};
  std::thread hammer([&] {
    httplib::Client h("127.0.0.1", port);
    std::size_t i = 0;
    while (!stop.load()) {
      const auto& id = ids[i++ % ids.size()];
      auto res = h.Get("/customers/" + id + "/score?top_k=0");
      if (res && res->status == 200) replies.emplace_back(id, json::parse(res->body));
    }
  });
  auto started = client.Post("/retrain");
  const bool accepted = started && started->status == 202;
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  svc.wait_idle();
  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  stop = true;
  hammer.join();
  server.stop();

  std::size_t coherent = 0;
  std::set<std::int64_t> versions;
  for (const auto& [id, body] : replies) {
    const auto v = body["model_version"].get<std::int64_t>();
    versions.insert(v);
    const auto a = artifact_for(v);
    if (a && body["score"].get<double>() == service::score_customer(db, *a, id, 0).score) ++coherent;
  }
  const bool swapped = versions.count(first->version_id) && versions.count(first->version_id + 1);
  return {exact == 100 && accepted && coherent == replies.size() && swapped,
          (Detail() << exact << "/100 scores equal offline predictions; " << coherent << "/" << replies.size()
                    << " replies during retrain coherent; versions seen " << versions.size())
              .str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"auroc-oracle", auroc_oracle},
      {"gbdt-hand-check", gbdt_hand_check},
      {"shap-correctness", shap_correctness},
      {"sampling-properties", sampling_properties},
      {"t-test-oracle", t_test_oracle},
      {"feature-engineering-oracle", feature_oracle},
      {"imbalance-trend", imbalance_trend},
      {"feature-engineering-trend", feature_trend},
      {"size-plateau", size_plateau},
      {"mega-test", mega},
      {"importance-ranking", importance_ranking},
      {"protocol-equivalence", protocol_equivalence},
      {"determinism-persistence", determinism},
      {"service-parity", service_parity},
  };
  std::size_t failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
