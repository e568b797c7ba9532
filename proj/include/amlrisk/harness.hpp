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
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "amlrisk/encode.hpp"
#include "amlrisk/metrics.hpp"
#include "amlrisk/store.hpp"
#include "amlrisk/trees.hpp"

namespace amlrisk::harness {

using nlohmann::json;

enum class Imbalance { None, UndersampleDev, OversampleDev, SmoteDev, ClassWeight, BalanceUpfront };

std::string to_string(Imbalance i);
Imbalance imbalance_from_string(const std::string& s);

/// Ordered map of hyperparameter name to candidate values. The Cartesian product
/// is enumerated with the last entry varying fastest.
struct GridSpec {
  std::vector<std::pair<std::string, std::vector<json>>> axes;

  std::size_t size() const;  // 1 for an empty grid
  std::vector<json> points() const;
  bool empty() const noexcept { return axes.empty(); }
  json to_json() const;
  static GridSpec from_json(const json& j);
};

// Standard 18-point hyperparameter grids.
GridSpec rf_table_grid();    // n_estimators x max_features x max_depth: 18 points
GridSpec xgb_table_grid();   // n_estimators x learning_rate x max_depth: 18 points
GridSpec lgbm_table_grid();  // n_estimators x learning_rate x max_depth: 18 points

struct PipelineSpec {
  std::optional<store::FeatureSpec> features;  // nullopt = KYC columns only
  encode::EncodingMode encoding = encode::EncodingMode::OneHot;
  Imbalance imbalance = Imbalance::None;
  trees::LearnerParams learner = trees::DtParams{};
  GridSpec grid;
  std::uint64_t seed = 42;
  std::size_t smote_k = 5;

  bool leaks() const noexcept { return imbalance == Imbalance::BalanceUpfront; }
  std::string fingerprint() const;
  json to_json() const;
  // Keys: features, countries, encoding, imbalance, learner, grid, seed, smote_k.
  static PipelineSpec from_json(const json& j);
};

/// Fills an empty V3 country list with the store's most frequent wire countries.
void resolve_countries(PipelineSpec& spec, const store::Store& store);

/// Rows of the raw data that took part in one run.
struct RunAudit {
  std::vector<std::size_t> fit_rows;   // fitting, resampling, encoder and selection
  std::vector<std::size_t> test_rows;  // scored only

  bool disjoint() const;
};

struct InnerProtocol {
  enum class Kind { KFold, MonteCarlo } kind = Kind::KFold;
  std::size_t k = 10;           // KFold
  std::size_t repeats = 30;     // MonteCarlo
  double fraction = 0.25;       // MonteCarlo validation share
};

struct Candidate {
  json point;
  std::vector<double> scores;
  double mean = 0.0;
};

struct GridResult {
  std::vector<Candidate> leaderboard;  // enumeration order
  std::size_t best = 0;                // first candidate with the highest mean
  std::size_t fits = 0;
  trees::LearnerParams best_params;
};

struct ExperimentReport {
  std::string protocol;
  json spec;
  std::string spec_fingerprint;
  std::vector<double> aurocs;
  std::vector<double> seconds;
  std::vector<std::uint64_t> run_seeds;
  std::vector<json> chosen_params;
  metrics::RunSummary summary;
  std::size_t fits = 0;        // every model fit, inner selection included
  std::size_t inner_fits = 0;  // fits spent on hyperparameter selection
  std::vector<RunAudit> audit;
  std::vector<std::string> warnings;
  bool leakage = false;
  double wall_seconds = 0.0;
  json extra;  // protocol specific details

  bool leak_free() const;
  // Timings are omitted when include_timings is false, for reproducibility checks.
  json to_json(bool include_timings = true) const;
  static ExperimentReport from_json(const json& j);
};

struct RunOutcome {
  double auroc = 0.0;
  double seconds = 0.0;
  std::vector<double> test_scores;
  std::vector<std::size_t> discarded;  // raw rows dropped by undersampling
  RunAudit audit;
  trees::TreeEnsemble model;
  encode::Encoder encoder;
};

/// One fit/score cycle: encoder fitted on `train_rows`, imbalance strategy applied
/// to the training rows only, model fitted with `params`, test AUROC measured.
RunOutcome run_once(const PipelineSpec& spec, const encode::RawData& raw,
                    std::span<const std::size_t> train_rows,
                    std::span<const std::size_t> test_rows, const trees::LearnerParams& params,
                    std::uint64_t seed);

/// Evaluates every grid point on `dev_rows` with the inner protocol; inner splits
/// are shared by all candidates. Ties go to the earlier point.
GridResult grid_search(const PipelineSpec& spec, const encode::RawData& raw,
                       std::span<const std::size_t> dev_rows, const InnerProtocol& inner,
                       std::uint64_t seed);

struct MonteCarloOptions {
  std::size_t repeats = 30;
  double test_fraction = 0.25;
  InnerProtocol inner{InnerProtocol::Kind::MonteCarlo, 10, 30, 0.25};
};

ExperimentReport monte_carlo_eval(const PipelineSpec& spec, const encode::RawData& raw,
                                  const MonteCarloOptions& opt = {});

ExperimentReport nested_kfold_eval(const PipelineSpec& spec, const encode::RawData& raw,
                                   std::size_t outer_k = 10, std::size_t inner_k = 10);

struct SizePoint {
  std::size_t size = 0;  // requested; 0 = all available training rows
  std::size_t actual = 0;
  metrics::RunSummary summary;
};

struct SensitivityReport {
  json spec;
  std::size_t holdout_rows = 0;
  std::size_t pool_rows = 0;
  std::vector<SizePoint> points;
  double wall_seconds = 0.0;
  json to_json(bool include_timings = true) const;
};

std::vector<std::size_t> default_train_sizes();  // 250, 500, 1000, 2000, 5000, all

SensitivityReport size_sensitivity(const PipelineSpec& spec, const encode::RawData& raw,
                                   const std::vector<std::size_t>& train_sizes,
                                   std::size_t repeats, double test_fraction = 0.25);

struct MegaTestReport {
  ExperimentReport standard;
  ExperimentReport mega;
  metrics::TTestResult test;
  std::vector<std::size_t> standard_sizes;
  std::vector<std::size_t> mega_sizes;
  json to_json(bool include_timings = true) const;
};

MegaTestReport mega_test(const PipelineSpec& spec, const encode::RawData& raw,
                         std::size_t repeats = 30, double test_fraction = 0.1);

struct ComparisonVerdict {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double difference = 0.0;  // mean_b - mean_a
  double runtime_ratio = 0.0;  // mean seconds of b over a
  metrics::TTestResult test;
  bool significant = false;
  std::string text;
  json to_json() const;
};

ComparisonVerdict compare(const ExperimentReport& a, const ExperimentReport& b, bool welch = false);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

/// Appends one row per report to a CSV leaderboard, writing the header if new.
void append_leaderboard(const std::filesystem::path& path, const ExperimentReport& r,
                        const std::string& label = "");
void write_grid_leaderboard(const std::filesystem::path& path, const GridResult& g);

}  // namespace amlrisk::harness
