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
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "amlrisk/common.hpp"
#include "amlrisk/schema.hpp"

struct sqlite3;

namespace amlrisk::store {

enum class FeatureVersion { V1, V2, V3 };

std::string to_string(FeatureVersion v);
// Accepts "v1"/"V1" etc.; throws ParameterError otherwise.
FeatureVersion feature_version_from_string(const std::string& s);

inline constexpr const char* kNanCountry = "NAN";
inline constexpr std::size_t kDefaultCountryCap = 20;

struct FeatureSpec {
  FeatureVersion version = FeatureVersion::V2;
  // V3 only: countries with their own per-country wire count columns.
  std::vector<std::string> countries;

  void validate() const;  // throws ParameterError
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Ordered feature names: 14 for V1, 24 for V2, 24 + 2 * (|countries| + 1) for V3.
std::vector<std::string> feature_names(const FeatureSpec& spec);

// Name of the materialized table for a version: features_v1, features_v2, features_v3.
std::string feature_table_name(FeatureVersion v);

struct FeatureTable {
  std::vector<std::string> names;
  std::vector<std::string> cust_ids;  // ascending, one per kyc row
  Matrix values;
};

struct LabelEvent {
  std::int64_t event_id = 0;
  std::string cust_id;
  int new_label = 0;
  std::string source;
  std::string timestamp;  // ISO-8601 UTC
};

struct GenderCount {
  std::string gender;
  std::size_t label0 = 0;
  std::size_t label1 = 0;
};

struct OccupationRisk {
  std::string occupation;
  std::size_t total = 0;
  std::size_t risky = 0;
  double risky_fraction = 0.0;
};

// Fixed-width histogram split by label; bin i covers [lo + i*width, lo + (i+1)*width).
struct Histogram {
  double lo = 0.0;
  double width = 1.0;
  std::vector<std::size_t> label0;
  std::vector<std::size_t> label1;

  std::size_t total() const;
};

struct ClassSizes {
  std::size_t label0 = 0;
  std::size_t label1 = 0;
  double majority_fraction = 0.0;
};

struct DatasetProfile {
  std::size_t n_customers = 0;
  ClassSizes classes;
  ClassSizes repeated_name_classes;  // customers whose name is shared with another customer
  std::vector<GenderCount> gender;
  std::vector<OccupationRisk> top_occupations;  // by risky fraction, then total, then name
  Histogram age;
  Histogram tenur;
};

struct ModelRecord {
  std::int64_t version_id = 0;
  std::string created_at;
  double created_unix = 0.0;
  std::string feature_version;
  std::string fingerprint;
  std::string metrics;
  std::int64_t label_watermark = 0;
  std::string artifact;
};

/// Single-file SQLite database holding the four source tables, materialized
/// feature tables, label events and the model registry. All access goes through
/// one mutex, so a Store may be shared between threads.
class Store {
 public:
  // ":memory:" opens a private in-memory database.
  explicit Store(const std::filesystem::path& path);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Schema DDL executed on open.
  static const std::vector<std::string>& schema_ddl();

  /// Inserts all rows in one transaction. Duplicate kyc.cust_id (or txn_id) throws
  /// IntegrityError and leaves the store unchanged.
  void ingest(const SyntheticDataset& ds);
  /// Reads the four CSV files from `dir` and ingests them.
  void ingest_csv(const std::filesystem::path& dir);

  SyntheticDataset dataset() const;  // rows ordered by cust_id / txn_id
  std::vector<KycRow> kyc() const;
  std::optional<KycRow> customer(const std::string& cust_id) const;
  bool has_customer(const std::string& cust_id) const;
  std::size_t row_count(const std::string& table) const;
  // FNV-1a over every row of `table` in key order.
  std::string table_checksum(const std::string& table) const;
  // Checksum of the source tables plus label events.
  std::string data_fingerprint() const;

  /// Countries seen on either side of wire transfers, most frequent first (ties by
  /// name), at most `cap`.
  std::vector<std::string> top_countries(std::size_t cap = kDefaultCountryCap) const;

  /// Aggregates the feature rows with set-based queries. With `cust_id` set, only
  /// that customer's row is computed (NotFoundError if unknown).
  FeatureTable build_features(const FeatureSpec& spec,
                              const std::optional<std::string>& cust_id = std::nullopt) const;
  /// Writes build_features(spec) into features_v1/v2/v3, replacing earlier content.
  void materialize_features(const FeatureSpec& spec);
  FeatureTable read_features(FeatureVersion version) const;

  /// Appends a label event; kyc.label is never modified.
  std::int64_t record_label(const std::string& cust_id, int label, const std::string& source);
  std::vector<LabelEvent> label_events(std::int64_t after_event_id = 0) const;
  std::vector<LabelEvent> label_history(const std::string& cust_id) const;
  std::int64_t last_event_id() const;
  std::size_t events_since(std::int64_t event_id) const;

  /// Latest event label if any, else kyc.label; aligned with `cust_ids`.
  std::vector<int> effective_labels(const std::vector<std::string>& cust_ids) const;
  std::map<std::string, int> effective_labels() const;

  DatasetProfile profile(std::size_t top_k = 10) const;

  // Incremented by every write to the source or feature tables.
  std::uint64_t generation() const noexcept { return generation_.load(); }

  /// Inserts a registry row and stores render(version_id) as its artifact, in one
  /// transaction. Returns the new version id.
  std::int64_t register_model(const ModelRecord& meta,
                              const std::function<std::string(std::int64_t)>& render);
  std::optional<ModelRecord> model(std::int64_t version_id) const;
  std::optional<ModelRecord> latest_model() const;
  std::vector<ModelRecord> models() const;  // without artifact bodies

 private:
  void exec(const std::string& sql) const;
  FeatureTable build_features_locked(const FeatureSpec& spec,
                                     const std::optional<std::string>& cust_id) const;

  sqlite3* db_ = nullptr;
  mutable std::recursive_mutex mu_;
  std::atomic<std::uint64_t> generation_{0};
};

/// Straight-loop reference for build_features over in-memory rows.
FeatureTable features_oracle(const SyntheticDataset& ds, const FeatureSpec& spec);

std::string utc_now_iso();
double unix_now();

}  // namespace amlrisk::store
