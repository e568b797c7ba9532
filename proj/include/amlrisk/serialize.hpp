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

#include <optional>
#include <string>

#include "json.hpp"

#include "amlrisk/encode.hpp"
#include "amlrisk/metrics.hpp"
#include "amlrisk/store.hpp"
#include "amlrisk/trees.hpp"

namespace amlrisk::serialize {

using nlohmann::json;

// Learner parameters as {"kind": "dt" | "rf" | "gbdt", ...fields}. Missing fields
// keep their defaults; unknown fields throw ConfigError.
json params_to_json(const trees::LearnerParams& p);
trees::LearnerParams params_from_json(const json& j);
// Overrides the named fields of `base` (same kind) with the values in `point`.
trees::LearnerParams apply_point(trees::LearnerParams base, const json& point);

json ensemble_to_json(const trees::TreeEnsemble& m);
trees::TreeEnsemble ensemble_from_json(const json& j);

json encoder_to_json(const encode::Encoder& e);
encode::Encoder encoder_from_json(const json& j);

// nullopt is written as null (KYC-only pipelines).
json features_to_json(const std::optional<store::FeatureSpec>& f);
std::optional<store::FeatureSpec> features_from_json(const json& j);

json report_to_json(const metrics::ClassificationReport& r);
metrics::ClassificationReport report_from_json(const json& j);

json summary_to_json(const metrics::RunSummary& s, bool include_timings = true);
json ttest_to_json(const metrics::TTestResult& t);

json profile_to_json(const store::DatasetProfile& p);

}  // namespace amlrisk::serialize
