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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "amlrisk/encode.hpp"
#include "amlrisk/explain.hpp"
#include "amlrisk/harness.hpp"
#include "amlrisk/metrics.hpp"
#include "amlrisk/store.hpp"
#include "amlrisk/trees.hpp"

namespace amlrisk::service {

using nlohmann::json;

inline constexpr const char* kArtifactFormat = "amlrisk-model";
inline constexpr int kArtifactSchemaVersion = 1;

struct ModelArtifact {
  std::int64_t version_id = 0;
  std::string created_at;
  double created_unix = 0.0;
  std::optional<store::FeatureSpec> features;
  encode::Encoder encoder;
  trees::TreeEnsemble model;
  metrics::ClassificationReport holdout;
  json hyperparameters;
  json spec;
  json leaderboard;  // grid search candidates, if any
  std::string data_fingerprint;
  std::int64_t label_watermark = 0;  // last label event included in training
  std::string shap_variant = explain::kShapVariant;

  std::vector<std::string> feature_names() const { return encoder.column_names(); }
};

/// Field-tagged JSON document {format, schema_version, checksum, body}. With
/// include_identity false the version id and timestamps are left out, which gives
/// the bytes compared by reproducibility checks.
std::string serialize(const ModelArtifact& a, bool include_identity = true);
/// Throws IntegrityError (with the byte offset for parse failures) on corrupt input.
ModelArtifact deserialize(const std::string& text);

void save_model(const ModelArtifact& a, const std::filesystem::path& path);
ModelArtifact load_model(const std::filesystem::path& path);

/// Pipeline used for the deployed model: one stratified holdout, K-fold grid search
/// on the development rows, then a refit on all development rows.
struct FinalSpec {
  harness::PipelineSpec pipeline;
  double holdout_fraction = 0.1;
  std::size_t cv_folds = 10;

  static FinalSpec deployment_default();
  json to_json() const;
  static FinalSpec from_json(const json& j);
};

/// Trains and registers a new artifact in the store's model registry.
ModelArtifact train_final(store::Store& store, const FinalSpec& spec);

struct ScoreResponse {
  std::string cust_id;
  double score = 0.0;
  double margin = 0.0;
  double base_value = 0.0;
  std::string space;
  std::int64_t model_version = 0;
  std::vector<explain::Contribution> top_features;

  json to_json() const;
};

/// Encoded feature row for one customer, built on demand from the current store.
std::vector<double> customer_row(const store::Store& store, const ModelArtifact& a,
                                 const std::string& cust_id);

ScoreResponse score_customer(const store::Store& store, const ModelArtifact& a,
                             const std::string& cust_id, std::size_t top_k = 5);

std::int64_t record_label(store::Store& store, const std::string& cust_id, int label,
                          const std::string& source);

struct CmlPolicy {
  std::optional<double> max_age_seconds = 24.0 * 3600.0;
  std::optional<std::size_t> change_threshold = 100;

  void validate() const;  // at least one trigger
  json to_json() const;
};

struct CmlResult {
  bool retrained = false;
  std::string reason;  // "age", "changes", "no model", "forced" or empty
  std::string error;   // set when retraining failed; the previous model stays active
  std::shared_ptr<const ModelArtifact> artifact;
};

struct ScoredCustomer {
  std::string cust_id;
  double score = 0.0;
  int age = 0;
  int tenur = 0;
  std::string occupation;
  std::string gender;
  int effective_label = 0;
};

/// Holds the active artifact and applies the retrain policy. The active artifact is
/// replaced atomically; readers keep the snapshot they obtained.
class ModelService {
 public:
  ModelService(store::Store& store, FinalSpec spec, CmlPolicy policy = {});
  ~ModelService();
  ModelService(const ModelService&) = delete;
  ModelService& operator=(const ModelService&) = delete;

  store::Store& store() { return store_; }
  std::shared_ptr<const ModelArtifact> active() const;
  void activate(std::shared_ptr<const ModelArtifact> a);
  // Activates the latest registry entry, if any. Returns true when one was found.
  bool load_latest();

  std::size_t changes_since_train() const;
  bool retrain_due(std::string* reason = nullptr) const;
  bool retraining() const noexcept { return running_.load(); }

  /// Retrains when the policy says so (always with `force`). Returns immediately
  /// with retrained = false when another retrain is in progress.
  CmlResult cml_tick(bool force = false);
  /// Starts cml_tick on a worker thread; false when a retrain is already running.
  bool retrain_async(bool force = true);
  // Waits for an asynchronous retrain to finish.
  void wait_idle();
  CmlResult last_result() const;

  void set_spec(FinalSpec spec);
  FinalSpec spec() const;
  const CmlPolicy& policy() const { return policy_; }

  struct Batch {
    std::int64_t model_version = 0;
    std::uint64_t generation = 0;
    std::vector<ScoredCustomer> rows;  // cust_id order
  };
  /// Scores every customer with the given artifact; cached per model version.
  std::shared_ptr<const Batch> batch_scores(const std::shared_ptr<const ModelArtifact>& a);

 private:
  store::Store& store_;
  mutable std::mutex mu_;
  FinalSpec spec_;
  CmlPolicy policy_;
  std::shared_ptr<const ModelArtifact> active_;
  std::mutex batch_mu_;
  std::shared_ptr<const Batch> batch_;
  std::atomic<bool> running_{false};
  CmlResult last_result_;
  std::mutex worker_mu_;
  std::thread worker_;

  CmlResult tick_claimed(bool force);
};

}  // namespace amlrisk::service
