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

#include "amlrisk/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "amlrisk/csv.hpp"
#include "amlrisk/sampling.hpp"
#include "amlrisk/serialize.hpp"

namespace amlrisk::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::size_t> pick(std::span<const std::size_t> base, std::span<const std::size_t> idx) {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(base[i]);
  return out;
}

Labels labels_at(const encode::RawData& raw, std::span<const std::size_t> rows) {
  Labels y;
  y.reserve(rows.size());
  for (auto r : rows) y.push_back(raw.labels[r]);
  return y;
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Rows available to a protocol: every row, or a balanced subset for balance_upfront.
std::vector<std::size_t> eligible_rows(const PipelineSpec& spec, const encode::RawData& raw,
                                       std::uint64_t seed) {
  std::vector<std::size_t> all(raw.size());
  std::iota(all.begin(), all.end(), 0);
  if (spec.imbalance != Imbalance::BalanceUpfront) return all;
  Matrix ids(raw.size(), 1);
  for (std::size_t i = 0; i < raw.size(); ++i) ids(i, 0) = static_cast<double>(i);
  const auto res = sampling::undersample(ids, raw.labels, derive_seed(seed, "upfront", 0));
  std::vector<std::size_t> kept;
  for (auto s : res.source) kept.push_back(static_cast<std::size_t>(s));
  return sorted(std::move(kept));
}

constexpr const char* kLeakWarning =
    "balance_upfront balances the whole dataset before splitting; test rows are biased "
    "(test-set leakage)";

template <typename T>
void visit_learner(trees::LearnerParams& p, T&& fn) {
  std::visit(fn, p);
}

}  // namespace

std::string to_string(Imbalance i) {
  switch (i) {
    case Imbalance::None: return "none";
    case Imbalance::UndersampleDev: return "undersample_dev";
    case Imbalance::OversampleDev: return "oversample_dev";
    case Imbalance::SmoteDev: return "smote_dev";
    case Imbalance::ClassWeight: return "class_weight";
    case Imbalance::BalanceUpfront: return "balance_upfront";
  }
  return "none";
}

Imbalance imbalance_from_string(const std::string& s) {
  for (auto i : {Imbalance::None, Imbalance::UndersampleDev, Imbalance::OversampleDev,
                 Imbalance::SmoteDev, Imbalance::ClassWeight, Imbalance::BalanceUpfront}) {
    if (to_string(i) == s) return i;
  }
  throw ConfigError("imbalance", "unknown strategy '" + s + "'");
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (const auto& [_, values] : axes) n *= values.size();
  return n;
}

std::vector<json> GridSpec::points() const {
  std::vector<json> out;
  const std::size_t n = size();
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    json p = json::object();
    std::size_t rem = i;
    for (std::size_t a = axes.size(); a-- > 0;) {
      const auto& values = axes[a].second;
      p[axes[a].first] = values[rem % values.size()];
      rem /= values.size();
    }
    out.push_back(std::move(p));
  }
  return out;
}

json GridSpec::to_json() const {
  json j = json::array();
  for (const auto& [name, values] : axes) j.push_back({{"name", name}, {"values", values}});
  return j;
}

GridSpec GridSpec::from_json(const json& j) {
  GridSpec g;
  if (j.is_null()) return g;
  auto add = [&](const std::string& name, const json& values) {
    if (!values.is_array() || values.empty()) throw ConfigError("grid." + name, "expected a non-empty list");
    g.axes.emplace_back(name, values.get<std::vector<json>>());
  };
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) add(it.key(), it.value());
  } else if (j.is_array()) {
    for (const auto& e : j) add(e.at("name").get<std::string>(), e.at("values"));
  } else {
    throw ConfigError("grid", "expected an object or a list of {name, values}");
  }
  return g;
}

GridSpec rf_table_grid() {
  return {{{"n_estimators", {50, 100, 200}},
           {"max_features", {"auto", "sqrt"}},
           {"max_depth", {-1, 5, 10}}}};
}

GridSpec xgb_table_grid() {
  return {{{"n_estimators", {50, 100, 200}},
           {"learning_rate", {0.01, 0.1, 0.2}},
           {"max_depth", {5, 10}}}};
}

GridSpec lgbm_table_grid() {
  return {{{"n_estimators", {50, 100, 200}},
           {"learning_rate", {0.01, 0.1, 0.2}},
           {"max_depth", {5, -1}}}};
}

std::string PipelineSpec::fingerprint() const { return hex64(fnv1a(to_json().dump())); }

json PipelineSpec::to_json() const {
  return {{"features", serialize::features_to_json(features)},
          {"encoding", encode::to_string(encoding)},
          {"imbalance", harness::to_string(imbalance)},
          {"learner", serialize::params_to_json(learner)},
          {"grid", grid.to_json()},
          {"seed", seed},
          {"smote_k", smote_k}};
}

PipelineSpec PipelineSpec::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("pipeline", "expected an object");
  static const std::vector<std::string> keys = {"features", "countries", "encoding", "imbalance",
                                                "learner",  "grid",      "seed",     "smote_k"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
      throw ConfigError(it.key(), "unknown pipeline field");
    }
  }
  PipelineSpec s;
  try {
    if (j.contains("features")) s.features = serialize::features_from_json(j["features"]);
    if (j.contains("countries") && s.features) {
      s.features->countries = j["countries"].get<std::vector<std::string>>();
    }
    if (j.contains("encoding")) s.encoding = encode::encoding_mode_from_string(j["encoding"].get<std::string>());
    if (j.contains("imbalance")) s.imbalance = imbalance_from_string(j["imbalance"].get<std::string>());
    if (j.contains("learner")) s.learner = serialize::params_from_json(j["learner"]);
    if (j.contains("grid")) s.grid = GridSpec::from_json(j["grid"]);
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("smote_k")) s.smote_k = j["smote_k"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError("pipeline", e.what());
  } catch (const ParameterError& e) {
    throw ConfigError("pipeline", e.what());
  }
  return s;
}

void resolve_countries(PipelineSpec& spec, const store::Store& store) {
  if (spec.features && spec.features->version == store::FeatureVersion::V3 &&
      spec.features->countries.empty()) {
    spec.features->countries = store.top_countries();
  }
}

bool RunAudit::disjoint() const {
  std::vector<std::size_t> a = fit_rows, b = test_rows;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::size_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return both.empty();
}

RunOutcome run_once(const PipelineSpec& spec, const encode::RawData& raw,
                    std::span<const std::size_t> train_rows,
                    std::span<const std::size_t> test_rows, const trees::LearnerParams& params,
                    std::uint64_t seed) {
  const auto t0 = Clock::now();
  RunOutcome out;
  out.encoder = encode::fit_encoder(raw, train_rows, spec.encoding);
  encode::Design train = encode::assemble(raw, out.encoder, train_rows);
  const encode::Design test = encode::assemble(raw, out.encoder, test_rows);

  trees::LearnerParams p = trees::with_seed(params, derive_seed(seed, "model", 0));
  const std::uint64_t resample_seed = derive_seed(seed, "resample", 0);
  Matrix X;
  Labels y;
  bool resampled = true;
  sampling::Resampled res;
  switch (spec.imbalance) {
    case Imbalance::UndersampleDev:
      res = sampling::undersample(train.X, train.y, resample_seed);
      for (auto d : res.discarded) out.discarded.push_back(train_rows[d]);
      break;
    case Imbalance::OversampleDev:
      res = sampling::oversample(train.X, train.y, resample_seed);
      break;
    case Imbalance::SmoteDev:
      res = sampling::smote(train.X, train.y, spec.smote_k, resample_seed);
      break;
    case Imbalance::ClassWeight:
      visit_learner(p, [](auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, trees::GbdtParams>) v.is_unbalance = true;
        else v.balanced_class_weight = true;
      });
      resampled = false;
      break;
    case Imbalance::None:
    case Imbalance::BalanceUpfront:
      resampled = false;
      break;
  }
  trees::TreeEnsemble model = resampled ? trees::fit(res.X, res.y, p) : trees::fit(train.X, train.y, p);
  model.feature_names = train.names;
  out.test_scores = trees::predict_proba(model, test.X);
  out.auroc = metrics::auroc(out.test_scores, test.y);
  out.audit.fit_rows.assign(train_rows.begin(), train_rows.end());
  out.audit.test_rows.assign(test_rows.begin(), test_rows.end());
  out.model = std::move(model);
  out.seconds = seconds_since(t0);
  return out;
}

GridResult grid_search(const PipelineSpec& spec, const encode::RawData& raw,
                       std::span<const std::size_t> dev_rows, const InnerProtocol& inner,
                       std::uint64_t seed) {
  const Labels dev_labels = labels_at(raw, dev_rows);
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> splits;
  if (inner.kind == InnerProtocol::Kind::KFold) {
    const auto plan = sampling::kfold_plan(dev_labels, inner.k, true, derive_seed(seed, "inner-kfold", 0));
    for (std::size_t f = 0; f < plan.k(); ++f) {
      splits.emplace_back(pick(dev_rows, plan.complement(f)), sorted(pick(dev_rows, plan.folds[f])));
    }
  } else {
    for (std::size_t r = 0; r < inner.repeats; ++r) {
      const auto s = sampling::stratified_split(dev_labels, inner.fraction, derive_seed(seed, "inner-mc", r));
      splits.emplace_back(sorted(pick(dev_rows, s.train)), sorted(pick(dev_rows, s.test)));
    }
  }

  const auto points = spec.grid.points();
  GridResult g;
  g.leaderboard.resize(points.size());
  std::vector<trees::LearnerParams> params;
  for (std::size_t c = 0; c < points.size(); ++c) {
    g.leaderboard[c].point = points[c];
    g.leaderboard[c].scores.assign(splits.size(), 0.0);
    params.push_back(serialize::apply_point(spec.learner, points[c]));
  }
  const std::size_t jobs = points.size() * splits.size();
  parallel_for(jobs, [&](std::size_t job) {
    const std::size_t c = job / splits.size();
    const std::size_t s = job % splits.size();
    // The same split and model seed for every candidate keeps comparisons paired.
    g.leaderboard[c].scores[s] =
        run_once(spec, raw, splits[s].first, splits[s].second, params[c], derive_seed(seed, "inner-run", s)).auroc;
  });
  g.fits = jobs;
  for (std::size_t c = 0; c < points.size(); ++c) {
    g.leaderboard[c].mean = metrics::mean(g.leaderboard[c].scores);
    if (g.leaderboard[c].mean > g.leaderboard[g.best].mean) g.best = c;
  }
  g.best_params = params[g.best];
  return g;
}

bool ExperimentReport::leak_free() const {
  return std::all_of(audit.begin(), audit.end(), [](const RunAudit& a) { return a.disjoint(); });
}

json ExperimentReport::to_json(bool include_timings) const {
  json runs = json::array();
  for (std::size_t r = 0; r < aurocs.size(); ++r) {
    json run = {{"run", r}, {"auroc", aurocs[r]}, {"seed", run_seeds.at(r)}};
    if (r < chosen_params.size()) run["params"] = chosen_params[r];
    if (r < audit.size()) {
      run["fit_rows"] = audit[r].fit_rows.size();
      run["test_rows"] = audit[r].test_rows.size();
      run["rows_fingerprint"] = hex64(fnv1a(json(audit[r].fit_rows).dump() + "|" + json(audit[r].test_rows).dump()));
    }
    if (include_timings) run["seconds"] = seconds.at(r);
    runs.push_back(std::move(run));
  }
  json j = {{"protocol", protocol},
            {"spec", spec},
            {"spec_fingerprint", spec_fingerprint},
            {"aurocs", aurocs},
            {"summary", serialize::summary_to_json(summary, include_timings)},
            {"runs", std::move(runs)},
            {"fits", fits},
            {"inner_fits", inner_fits},
            {"leakage", leakage},
            {"leak_free_audit", leak_free()},
            {"warnings", warnings},
            {"extra", extra}};
  if (include_timings) {
    j["seconds"] = seconds;
    j["wall_seconds"] = wall_seconds;
  }
  return j;
}

ExperimentReport ExperimentReport::from_json(const json& j) {
  ExperimentReport r;
  try {
    r.protocol = j.at("protocol").get<std::string>();
    r.spec = j.value("spec", json::object());
    r.spec_fingerprint = j.value("spec_fingerprint", std::string());
    r.aurocs = j.at("aurocs").get<std::vector<double>>();
    r.seconds = j.value("seconds", std::vector<double>(r.aurocs.size(), 0.0));
    for (const auto& run : j.value("runs", json::array())) {
      r.run_seeds.push_back(run.value("seed", std::uint64_t{0}));
      r.chosen_params.push_back(run.value("params", json()));
    }
    r.fits = j.value("fits", std::size_t{0});
    r.inner_fits = j.value("inner_fits", std::size_t{0});
    r.leakage = j.value("leakage", false);
    r.warnings = j.value("warnings", std::vector<std::string>());
    r.wall_seconds = j.value("wall_seconds", 0.0);
    r.extra = j.value("extra", json());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  if (r.aurocs.empty()) throw ValidationError("report has no runs");
  r.summary = metrics::summarize_runs(r.aurocs, r.seconds);
  return r;
}

namespace {

ExperimentReport new_report(const PipelineSpec& spec, const std::string& protocol, std::size_t runs) {
  ExperimentReport r;
  r.protocol = protocol;
  r.spec = spec.to_json();
  r.spec_fingerprint = spec.fingerprint();
  r.aurocs.assign(runs, 0.0);
  r.seconds.assign(runs, 0.0);
  r.run_seeds.assign(runs, 0);
  r.chosen_params.assign(runs, json());
  r.audit.resize(runs);
  r.leakage = spec.leaks();
  if (r.leakage) r.warnings.emplace_back(kLeakWarning);
  return r;
}

void finish(ExperimentReport& r, Clock::time_point t0) {
  r.summary = metrics::summarize_runs(r.aurocs, r.seconds);
  r.wall_seconds = seconds_since(t0);
}

}  // namespace

ExperimentReport monte_carlo_eval(const PipelineSpec& spec, const encode::RawData& raw,
                                  const MonteCarloOptions& opt) {
  if (opt.repeats == 0) throw ParameterError("repeats must be at least 1");
  const auto t0 = Clock::now();
  ExperimentReport r = new_report(spec, "monte-carlo", opt.repeats);
  std::vector<std::size_t> inner(opt.repeats, 0);
  std::vector<std::string> warn(opt.repeats);
  const bool tune = spec.grid.size() > 1;
  parallel_for(opt.repeats, [&](std::size_t i) {
    const auto ti = Clock::now();
    const std::uint64_t seed = derive_seed(spec.seed, "monte-carlo", i);
    const auto rows = eligible_rows(spec, raw, seed);
    const auto split = sampling::stratified_split(labels_at(raw, rows), opt.test_fraction, derive_seed(seed, "split", 0));
    const auto train = sorted(pick(rows, split.train));
    const auto test = sorted(pick(rows, split.test));
    warn[i] = split.warning;
    trees::LearnerParams params = spec.learner;
    if (tune) {
      const auto g = grid_search(spec, raw, train, opt.inner, derive_seed(seed, "inner", 0));
      params = g.best_params;
      inner[i] = g.fits;
    }
    const auto out = run_once(spec, raw, train, test, params, seed);
    r.aurocs[i] = out.auroc;
    r.run_seeds[i] = seed;
    r.chosen_params[i] = serialize::params_to_json(params);
    r.audit[i] = out.audit;
    r.seconds[i] = seconds_since(ti);
  });
  for (std::size_t i = 0; i < opt.repeats; ++i) {
    r.inner_fits += inner[i];
    if (!warn[i].empty()) r.warnings.push_back("run " + std::to_string(i) + ": " + warn[i]);
  }
  r.fits = r.inner_fits + opt.repeats;
  r.extra = {{"repeats", opt.repeats}, {"test_fraction", opt.test_fraction}, {"grid_size", spec.grid.size()}};
  finish(r, t0);
  return r;
}

ExperimentReport nested_kfold_eval(const PipelineSpec& spec, const encode::RawData& raw,
                                   std::size_t outer_k, std::size_t inner_k) {
  const auto t0 = Clock::now();
  const auto rows = eligible_rows(spec, raw, derive_seed(spec.seed, "nested-kfold", 0));
  const auto plan = sampling::kfold_plan(labels_at(raw, rows), outer_k, true,
                                         derive_seed(spec.seed, "nested-kfold-outer", 0));
  ExperimentReport r = new_report(spec, "nested-kfold", outer_k);
  std::vector<std::size_t> inner(outer_k, 0);
  const bool tune = spec.grid.size() > 1;
  parallel_for(outer_k, [&](std::size_t f) {
    const auto tf = Clock::now();
    const std::uint64_t seed = derive_seed(spec.seed, "nested-kfold", f + 1);
    const auto dev = pick(rows, plan.complement(f));
    const auto test = sorted(pick(rows, plan.folds[f]));
    trees::LearnerParams params = spec.learner;
    if (tune) {
      const auto g = grid_search(spec, raw, dev, {InnerProtocol::Kind::KFold, inner_k, 0, 0.0},
                                 derive_seed(seed, "inner", 0));
      params = g.best_params;
      inner[f] = g.fits;
    }
    const auto out = run_once(spec, raw, dev, test, params, seed);
    r.aurocs[f] = out.auroc;
    r.run_seeds[f] = seed;
    r.chosen_params[f] = serialize::params_to_json(params);
    r.audit[f] = out.audit;
    r.seconds[f] = seconds_since(tf);
  });
  for (auto n : inner) r.inner_fits += n;
  r.fits = r.inner_fits + outer_k;
  r.extra = {{"outer_k", outer_k}, {"inner_k", inner_k}, {"grid_size", spec.grid.size()}};
  finish(r, t0);
  return r;
}

std::vector<std::size_t> default_train_sizes() { return {250, 500, 1000, 2000, 5000, 0}; }

json SensitivityReport::to_json(bool include_timings) const {
  json pts = json::array();
  for (const auto& p : points) {
    pts.push_back({{"size", p.size == 0 ? json("all") : json(p.size)},
                   {"actual", p.actual},
                   {"summary", serialize::summary_to_json(p.summary, include_timings)}});
  }
  json j = {{"protocol", "size-sensitivity"}, {"spec", spec}, {"holdout_rows", holdout_rows},
            {"pool_rows", pool_rows}, {"points", std::move(pts)}};
  if (include_timings) j["wall_seconds"] = wall_seconds;
  return j;
}

SensitivityReport size_sensitivity(const PipelineSpec& spec, const encode::RawData& raw,
                                   const std::vector<std::size_t>& train_sizes,
                                   std::size_t repeats, double test_fraction) {
  if (repeats == 0) throw ParameterError("repeats must be at least 1");
  const auto t0 = Clock::now();
  const auto rows = eligible_rows(spec, raw, derive_seed(spec.seed, "size-sensitivity", 0));
  const auto holdout = sampling::stratified_split(labels_at(raw, rows), test_fraction,
                                                  derive_seed(spec.seed, "size-holdout", 0));
  const auto pool = sorted(pick(rows, holdout.train));
  const auto test = sorted(pick(rows, holdout.test));
  const Labels pool_labels = labels_at(raw, pool);
  for (auto s : train_sizes) {
    if (s > pool.size()) {
      throw ParameterError("train size " + std::to_string(s) + " exceeds the " +
                           std::to_string(pool.size()) + " available training rows");
    }
  }
  SensitivityReport rep;
  rep.spec = spec.to_json();
  rep.holdout_rows = test.size();
  rep.pool_rows = pool.size();
  const std::size_t jobs = train_sizes.size() * repeats;
  std::vector<double> auc(jobs), secs(jobs);
  parallel_for(jobs, [&](std::size_t job) {
    const std::size_t si = job / repeats;
    const std::size_t rep_i = job % repeats;
    const std::size_t size = train_sizes[si] == 0 ? pool.size() : train_sizes[si];
    const std::uint64_t seed = derive_seed(derive_seed(spec.seed, "size", size), "repeat", rep_i);
    std::vector<std::size_t> train =
        size == pool.size() ? pool : pick(pool, sampling::stratified_subsample(pool_labels, size, seed));
    const auto out = run_once(spec, raw, train, test, spec.learner, seed);
    auc[job] = out.auroc;
    secs[job] = out.seconds;
  });
  for (std::size_t si = 0; si < train_sizes.size(); ++si) {
    SizePoint p;
    p.size = train_sizes[si];
    p.actual = train_sizes[si] == 0 ? pool.size() : train_sizes[si];
    p.summary = metrics::summarize_runs(std::span(auc).subspan(si * repeats, repeats),
                                        std::span(secs).subspan(si * repeats, repeats));
    rep.points.push_back(std::move(p));
  }
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

json MegaTestReport::to_json(bool include_timings) const {
  return {{"protocol", "mega-test"},
          {"standard", standard.to_json(include_timings)},
          {"mega", mega.to_json(include_timings)},
          {"t_test", serialize::ttest_to_json(test)},
          {"standard_sizes", standard_sizes},
          {"mega_sizes", mega_sizes}};
}

MegaTestReport mega_test(const PipelineSpec& spec, const encode::RawData& raw,
                         std::size_t repeats, double test_fraction) {
  if (spec.imbalance != Imbalance::UndersampleDev) {
    throw ParameterError("mega test requires the undersample_dev imbalance strategy");
  }
  if (repeats == 0) throw ParameterError("repeats must be at least 1");
  const auto t0 = Clock::now();
  MegaTestReport m;
  m.standard = new_report(spec, "mega-test/standard", repeats);
  m.mega = new_report(spec, "mega-test/mega", repeats);
  m.standard_sizes.assign(repeats, 0);
  m.mega_sizes.assign(repeats, 0);
  std::vector<std::size_t> all(raw.size());
  std::iota(all.begin(), all.end(), 0);
  parallel_for(repeats, [&](std::size_t i) {
    const auto ti = Clock::now();
    const std::uint64_t seed = derive_seed(spec.seed, "mega-test", i);
    const auto split = sampling::stratified_split(raw.labels, test_fraction, derive_seed(seed, "split", 0));
    const auto train = sorted(split.train);
    const auto test = sorted(split.test);
    const auto out = run_once(spec, raw, train, test, spec.learner, seed);
    const double standard_seconds = seconds_since(ti);

    const auto extra = encode::assemble(raw, out.encoder, out.discarded);
    std::vector<double> scores = out.test_scores;
    const auto extra_scores = trees::predict_proba(out.model, extra.X);
    scores.insert(scores.end(), extra_scores.begin(), extra_scores.end());
    Labels y = labels_at(raw, test);
    y.insert(y.end(), extra.y.begin(), extra.y.end());

    m.standard.aurocs[i] = out.auroc;
    m.standard.seconds[i] = standard_seconds;
    m.standard.run_seeds[i] = seed;
    m.standard.audit[i] = out.audit;
    m.standard_sizes[i] = test.size();

    m.mega.aurocs[i] = metrics::auroc(scores, y);
    m.mega.run_seeds[i] = seed;
    RunAudit audit;
    std::vector<std::size_t> kept;
    std::vector<std::size_t> discarded = sorted(out.discarded);
    std::set_difference(train.begin(), train.end(), discarded.begin(), discarded.end(), std::back_inserter(kept));
    audit.fit_rows = std::move(kept);
    audit.test_rows = test;
    audit.test_rows.insert(audit.test_rows.end(), discarded.begin(), discarded.end());
    m.mega.audit[i] = std::move(audit);
    m.mega_sizes[i] = y.size();
    m.mega.seconds[i] = seconds_since(ti);
  });
  m.standard.fits = repeats;
  m.mega.fits = repeats;
  finish(m.standard, t0);
  finish(m.mega, t0);
  m.test = metrics::t_test(m.standard.aurocs, m.mega.aurocs);
  return m;
}

json ComparisonVerdict::to_json() const {
  return {{"mean_a", mean_a},
          {"mean_b", mean_b},
          {"difference", difference},
          {"runtime_ratio", runtime_ratio},
          {"t_test", serialize::ttest_to_json(test)},
          {"significant", significant},
          {"verdict", text}};
}

ComparisonVerdict compare(const ExperimentReport& a, const ExperimentReport& b, bool welch) {
  if (a.aurocs.empty() || b.aurocs.empty()) throw ValidationError("cannot compare empty reports");
  ComparisonVerdict v;
  const auto sa = metrics::summarize_runs(a.aurocs, a.seconds);
  const auto sb = metrics::summarize_runs(b.aurocs, b.seconds);
  v.mean_a = sa.mean;
  v.mean_b = sb.mean;
  v.difference = sb.mean - sa.mean;
  v.runtime_ratio = sa.mean_seconds > 0 ? sb.mean_seconds / sa.mean_seconds : 0.0;
  if (a.aurocs.size() >= 2 && b.aurocs.size() >= 2) {
    v.test = metrics::t_test(a.aurocs, b.aurocs, welch);
  } else {
    v.test.p_value = 1.0;
    v.test.degenerate = true;
  }
  v.significant = v.test.significant;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "mean AUROC A %.3f (%s) vs B %.3f (%s); difference %+.3f is %s at alpha %.2f "
                "(t = %.4f, df = %.0f, p = %.4g); runtime ratio B/A %.2f",
                sa.mean, sa.format().c_str(), sb.mean, sb.format().c_str(), v.difference,
                v.significant ? "significant" : "not significant", v.test.alpha, v.test.t,
                v.test.df, v.test.p_value, v.runtime_ratio);
  v.text = buf;
  return v;
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw IntegrityError(path.string() + ": " + e.what(), e.byte);
  }
}

namespace {

const std::vector<std::string> kLeaderboardHeader = {
    "label", "protocol", "spec_fingerprint", "learner", "features", "encoding", "imbalance",
    "runs",  "mean_auroc", "sd_auroc", "summary", "total_seconds", "fits", "leakage"};

}  // namespace

void append_leaderboard(const std::filesystem::path& path, const ExperimentReport& r,
                        const std::string& label) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  auto emit = [&](const std::vector<std::string>& rec) {
    for (std::size_t i = 0; i < rec.size(); ++i) out << (i ? "," : "") << csv::escape(rec[i]);
    out << '\n';
  };
  if (fresh) emit(kLeaderboardHeader);
  const json& s = r.spec;
  const std::string features = s.contains("features") && !s["features"].is_null()
                                   ? s["features"].value("version", std::string("?"))
                                   : std::string("kyc");
  emit({label, r.protocol, r.spec_fingerprint,
        s.contains("learner") ? s["learner"].value("kind", std::string()) : std::string(), features,
        s.value("encoding", std::string()), s.value("imbalance", std::string()),
        std::to_string(r.aurocs.size()), csv::format_double(r.summary.mean),
        csv::format_double(r.summary.sd), r.summary.format(), csv::format_double(r.summary.total_seconds),
        std::to_string(r.fits), r.leakage ? "1" : "0"});
}

void write_grid_leaderboard(const std::filesystem::path& path, const GridResult& g) {
  csv::Table t;
  t.header = {"rank", "candidate", "params", "mean_auroc", "best"};
  std::vector<std::size_t> order(g.leaderboard.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return g.leaderboard[a].mean > g.leaderboard[b].mean;
  });
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& c = g.leaderboard[order[rank]];
    t.rows.push_back({std::to_string(rank + 1), std::to_string(order[rank]), c.point.dump(),
                      csv::format_double(c.mean), order[rank] == g.best ? "1" : "0"});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  csv::write(path, t);
}

}  // namespace amlrisk::harness
