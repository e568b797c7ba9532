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

#include "amlrisk/service.hpp"

#include <algorithm>

#include "amlrisk/sampling.hpp"
#include "amlrisk/serialize.hpp"

namespace amlrisk::service {

FinalSpec FinalSpec::deployment_default() {
  FinalSpec s;
  s.pipeline.features = store::FeatureSpec{store::FeatureVersion::V2, {}};
  s.pipeline.encoding = encode::EncodingMode::OneHot;
  s.pipeline.imbalance = harness::Imbalance::UndersampleDev;
  trees::GbdtParams p;
  p.n_estimators = 200;
  p.learning_rate = 0.2;
  p.num_leaves = 62;
  p.max_depth = 5;
  p.reg_lambda = 1.0;
  p.max_bin = 510;
  p.is_unbalance = true;
  s.pipeline.learner = p;
  s.pipeline.seed = 7;
  return s;
}

json FinalSpec::to_json() const {
  return {{"pipeline", pipeline.to_json()}, {"holdout_fraction", holdout_fraction}, {"cv_folds", cv_folds}};
}

FinalSpec FinalSpec::from_json(const json& j) {
  FinalSpec s = deployment_default();
  if (j.contains("pipeline")) s.pipeline = harness::PipelineSpec::from_json(j["pipeline"]);
  if (j.contains("holdout_fraction")) s.holdout_fraction = j["holdout_fraction"].get<double>();
  if (j.contains("cv_folds")) s.cv_folds = j["cv_folds"].get<std::size_t>();
  if (!(s.holdout_fraction > 0.0 && s.holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction", "must be in (0, 1)");
  }
  if (s.cv_folds < 2) throw ConfigError("cv_folds", "must be at least 2");
  return s;
}

ModelArtifact train_final(store::Store& store, const FinalSpec& final_spec) {
  FinalSpec spec = final_spec;
  harness::resolve_countries(spec.pipeline, store);
  const auto& pipeline = spec.pipeline;

  ModelArtifact a;
  a.label_watermark = store.last_event_id();
  a.data_fingerprint = store.data_fingerprint();
  const encode::RawData raw = encode::load_raw(store, pipeline.features);

  const auto split = sampling::stratified_split(raw.labels, spec.holdout_fraction,
                                                derive_seed(pipeline.seed, "final-holdout", 0));
  std::vector<std::size_t> dev = split.train;
  std::vector<std::size_t> test = split.test;
  std::sort(dev.begin(), dev.end());
  std::sort(test.begin(), test.end());

  trees::LearnerParams params = pipeline.learner;
  a.leaderboard = json::array();
  if (pipeline.grid.size() > 1) {
    const auto g = harness::grid_search(pipeline, raw, dev,
                                        {harness::InnerProtocol::Kind::KFold, spec.cv_folds, 0, 0.0},
                                        derive_seed(pipeline.seed, "final-cv", 0));
    params = g.best_params;
    for (const auto& c : g.leaderboard) a.leaderboard.push_back({{"params", c.point}, {"mean_auroc", c.mean}});
  }
  auto out = harness::run_once(pipeline, raw, dev, test, params, derive_seed(pipeline.seed, "final-fit", 0));
  Labels test_labels;
  for (auto i : test) test_labels.push_back(raw.labels[i]);

  a.features = pipeline.features;
  a.encoder = std::move(out.encoder);
  a.model = std::move(out.model);
  a.holdout = metrics::classification_report(out.test_scores, test_labels);
  a.hyperparameters = serialize::params_to_json(params);
  a.spec = spec.to_json();
  a.created_at = store::utc_now_iso();
  a.created_unix = store::unix_now();

  store::ModelRecord meta;
  meta.created_at = a.created_at;
  meta.created_unix = a.created_unix;
  meta.feature_version = a.features ? store::to_string(a.features->version) : "kyc";
  meta.fingerprint = a.data_fingerprint;
  meta.metrics = serialize::report_to_json(a.holdout).dump();
  meta.label_watermark = a.label_watermark;
  store.register_model(meta, [&](std::int64_t id) {
    a.version_id = id;
    return serialize(a);
  });
  return a;
}

json ScoreResponse::to_json() const {
  json top = json::array();
  for (const auto& c : top_features) top.push_back({{"feature", c.feature}, {"attribution", c.attribution}});
  return {{"cust_id", cust_id},     {"score", score},           {"margin", margin},
          {"base_value", base_value}, {"space", space},         {"model_version", model_version},
          {"top_features", std::move(top)}};
}

std::vector<double> customer_row(const store::Store& store, const ModelArtifact& a,
                                 const std::string& cust_id) {
  const auto kyc = store.customer(cust_id);
  if (!kyc) throw NotFoundError("unknown customer '" + cust_id + "'");
  if (!a.features) return a.encoder.encode_row(*kyc, {});
  const auto t = store.build_features(*a.features, cust_id);
  return a.encoder.encode_row(*kyc, t.values.row(0));
}

ScoreResponse score_customer(const store::Store& store, const ModelArtifact& a,
                             const std::string& cust_id, std::size_t top_k) {
  const auto row = customer_row(store, a, cust_id);
  ScoreResponse r;
  r.cust_id = cust_id;
  r.model_version = a.version_id;
  r.score = trees::predict_proba_row(a.model, row);
  const auto shap = explain::tree_shap(a.model, row);
  r.margin = shap.margin;
  r.base_value = shap.base_value;
  r.space = shap.space;
  const auto names = a.feature_names();
  r.top_features = explain::top_k(shap, names, top_k);
  return r;
}

std::int64_t record_label(store::Store& store, const std::string& cust_id, int label,
                          const std::string& source) {
  return store.record_label(cust_id, label, source);
}

void CmlPolicy::validate() const {
  if (!max_age_seconds && !change_threshold) {
    throw ConfigError("cml", "configure a maximum model age, a change threshold, or both");
  }
  if (max_age_seconds && !(*max_age_seconds > 0.0)) throw ConfigError("cml.max_age", "must be positive");
}

json CmlPolicy::to_json() const {
  return {{"max_age_seconds", max_age_seconds ? json(*max_age_seconds) : json()},
          {"change_threshold", change_threshold ? json(*change_threshold) : json()}};
}

ModelService::ModelService(store::Store& store, FinalSpec spec, CmlPolicy policy)
    : store_(store), spec_(std::move(spec)), policy_(policy) {
  policy_.validate();
}

ModelService::~ModelService() { wait_idle(); }

std::shared_ptr<const ModelArtifact> ModelService::active() const {
  std::lock_guard lock(mu_);
  return active_;
}

void ModelService::activate(std::shared_ptr<const ModelArtifact> a) {
  std::lock_guard lock(mu_);
  active_ = std::move(a);
}

bool ModelService::load_latest() {
  const auto rec = store_.latest_model();
  if (!rec) return false;
  activate(std::make_shared<const ModelArtifact>(deserialize(rec->artifact)));
  return true;
}

std::size_t ModelService::changes_since_train() const {
  const auto a = active();
  return store_.events_since(a ? a->label_watermark : 0);
}

bool ModelService::retrain_due(std::string* reason) const {
  const auto a = active();
  auto say = [&](const char* r) {
    if (reason) *reason = r;
    return true;
  };
  if (!a) return say("no model");
  if (policy_.change_threshold && store_.events_since(a->label_watermark) > *policy_.change_threshold) {
    return say("changes");
  }
  if (policy_.max_age_seconds && store::unix_now() - a->created_unix > *policy_.max_age_seconds) {
    return say("age");
  }
  if (reason) reason->clear();
  return false;
}

void ModelService::set_spec(FinalSpec spec) {
  std::lock_guard lock(mu_);
  spec_ = std::move(spec);
}

FinalSpec ModelService::spec() const {
  std::lock_guard lock(mu_);
  return spec_;
}

CmlResult ModelService::tick_claimed(bool force) {
  CmlResult r;
  std::string reason;
  if (!retrain_due(&reason) && !force) {
    r.artifact = active();
    return r;
  }
  r.reason = reason.empty() ? "forced" : reason;
  try {
    auto fresh = std::make_shared<const ModelArtifact>(train_final(store_, spec()));
    activate(fresh);
    r.retrained = true;
    r.artifact = std::move(fresh);
  } catch (const std::exception& e) {
    r.error = e.what();
    r.artifact = active();
  }
  return r;
}

CmlResult ModelService::cml_tick(bool force) {
  bool expected = false;
  if (!running_.compare_exchange_strong(expected, true)) {
    CmlResult busy;
    busy.error = "retrain already running";
    busy.artifact = active();
    return busy;
  }
  CmlResult r = tick_claimed(force);
  {
    std::lock_guard lock(mu_);
    last_result_ = r;
  }
  running_.store(false);
  return r;
}

bool ModelService::retrain_async(bool force) {
  bool expected = false;
  if (!running_.compare_exchange_strong(expected, true)) return false;
  std::lock_guard lock(worker_mu_);
  if (worker_.joinable()) worker_.join();
  worker_ = std::thread([this, force] {
    CmlResult r = tick_claimed(force);
    {
      std::lock_guard l(mu_);
      last_result_ = std::move(r);
    }
    running_.store(false);
  });
  return true;
}

void ModelService::wait_idle() {
  std::lock_guard lock(worker_mu_);
  if (worker_.joinable()) worker_.join();
}

CmlResult ModelService::last_result() const {
  std::lock_guard lock(mu_);
  return last_result_;
}

std::shared_ptr<const ModelService::Batch> ModelService::batch_scores(
    const std::shared_ptr<const ModelArtifact>& a) {
  if (!a) throw NotFoundError("no active model");
  std::lock_guard lock(batch_mu_);
  const auto gen = store_.generation();
  if (batch_ && batch_->model_version == a->version_id && batch_->generation == gen) return batch_;
  const encode::RawData raw = encode::load_raw(store_, a->features);
  const encode::Design d = encode::assemble(raw, a->encoder);
  const auto scores = trees::predict_proba(a->model, d.X);
  auto b = std::make_shared<Batch>();
  b->model_version = a->version_id;
  b->generation = gen;
  b->rows.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& k = raw.kyc[i];
    b->rows.push_back({k.cust_id, scores[i], k.age, k.tenur, k.occupation, k.gender, raw.labels[i]});
  }
  batch_ = b;
  return b;
}

}  // namespace amlrisk::service
