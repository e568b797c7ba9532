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

#include "amlrisk/encode.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace amlrisk::encode {

std::string to_string(EncodingMode m) { return m == EncodingMode::Label ? "label" : "onehot"; }

EncodingMode encoding_mode_from_string(const std::string& s) {
  if (s == "label") return EncodingMode::Label;
  if (s == "onehot" || s == "one-hot" || s == "one_hot") return EncodingMode::OneHot;
  throw ParameterError("unknown encoding '" + s + "' (expected label or onehot)");
}

std::optional<std::size_t> CategoryMap::find(const std::string& value) const {
  auto it = std::lower_bound(categories.begin(), categories.end(), value);
  if (it == categories.end() || *it != value) return std::nullopt;
  return static_cast<std::size_t>(it - categories.begin());
}

CategoryMap fit_category_map(std::span<const std::string> values) {
  std::set<std::string> distinct(values.begin(), values.end());
  return CategoryMap{{distinct.begin(), distinct.end()}};
}

void encode_value(const std::string& value, const CategoryMap& map, EncodingMode mode,
                  std::span<double> out) {
  const auto idx = map.find(value);
  if (mode == EncodingMode::Label) {
    out[0] = static_cast<double>(idx.value_or(map.size()));
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  if (idx) out[*idx] = 1.0;
}

Matrix apply_encoding(std::span<const std::string> values, const CategoryMap& map,
                      EncodingMode mode) {
  const std::size_t w = mode == EncodingMode::Label ? 1 : map.size();
  Matrix m(values.size(), w);
  for (std::size_t i = 0; i < values.size(); ++i) encode_value(values[i], map, mode, m.row(i));
  return m;
}

std::size_t Encoder::width() const {
  const std::size_t cat = mode == EncodingMode::Label ? 2 : gender.size() + occupation.size();
  return cat + 2 + engineered.size();
}

std::vector<std::string> Encoder::column_names() const {
  std::vector<std::string> names;
  names.reserve(width());
  if (mode == EncodingMode::Label) {
    names.emplace_back("gender");
    names.emplace_back("occupation");
  } else {
    for (const auto& g : gender.categories) names.push_back("gender=" + g);
    for (const auto& o : occupation.categories) names.push_back("occupation=" + o);
  }
  names.emplace_back("age");
  names.emplace_back("tenur");
  names.insert(names.end(), engineered.begin(), engineered.end());
  return names;
}

void Encoder::encode_row(const KycRow& kyc, std::span<const double> engineered_values,
                         std::span<double> out) const {
  if (engineered_values.size() != engineered.size()) {
    throw ValidationError("expected " + std::to_string(engineered.size()) +
                          " engineered values, got " + std::to_string(engineered_values.size()));
  }
  std::size_t c = 0;
  const std::size_t gw = mode == EncodingMode::Label ? 1 : gender.size();
  const std::size_t ow = mode == EncodingMode::Label ? 1 : occupation.size();
  encode_value(kyc.gender, gender, mode, out.subspan(c, gw));
  c += gw;
  encode_value(kyc.occupation, occupation, mode, out.subspan(c, ow));
  c += ow;
  out[c++] = kyc.age;
  out[c++] = kyc.tenur;
  std::copy(engineered_values.begin(), engineered_values.end(), out.begin() + static_cast<long>(c));
}

std::vector<double> Encoder::encode_row(const KycRow& kyc,
                                        std::span<const double> engineered_values) const {
  std::vector<double> out(width());
  encode_row(kyc, engineered_values, out);
  return out;
}

namespace {

void check_aligned(const RawData& raw) {
  if (!raw.features) return;
  const auto& ids = raw.feature_table.cust_ids;
  if (ids.size() != raw.kyc.size()) {
    throw IntegrityError("feature table has " + std::to_string(ids.size()) + " rows for " +
                         std::to_string(raw.kyc.size()) + " customers");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != raw.kyc[i].cust_id) {
      throw IntegrityError("customer '" + raw.kyc[i].cust_id + "' missing from feature table");
    }
  }
}

}  // namespace

RawData load_raw(const store::Store& store, const std::optional<store::FeatureSpec>& features) {
  RawData raw;
  raw.kyc = store.kyc();
  raw.features = features;
  if (features) raw.feature_table = store.build_features(*features);
  std::vector<std::string> ids;
  ids.reserve(raw.kyc.size());
  for (const auto& k : raw.kyc) ids.push_back(k.cust_id);
  raw.labels = store.effective_labels(ids);
  check_aligned(raw);
  return raw;
}

RawData load_raw(const SyntheticDataset& ds, const std::optional<store::FeatureSpec>& features) {
  RawData raw;
  raw.kyc = ds.kyc;
  std::sort(raw.kyc.begin(), raw.kyc.end(),
            [](const KycRow& a, const KycRow& b) { return a.cust_id < b.cust_id; });
  raw.features = features;
  if (features) raw.feature_table = store::features_oracle(ds, *features);
  for (const auto& k : raw.kyc) raw.labels.push_back(k.label);
  check_aligned(raw);
  return raw;
}

Encoder fit_encoder(const RawData& raw, std::span<const std::size_t> train_rows,
                    EncodingMode mode) {
  std::vector<std::string> genders;
  std::vector<std::string> occupations;
  auto take = [&](std::size_t i) {
    genders.push_back(raw.kyc[i].gender);
    occupations.push_back(raw.kyc[i].occupation);
  };
  if (train_rows.empty()) {
    for (std::size_t i = 0; i < raw.size(); ++i) take(i);
  } else {
    for (auto i : train_rows) take(i);
  }
  Encoder e;
  e.mode = mode;
  e.gender = fit_category_map(genders);
  e.occupation = fit_category_map(occupations);
  if (raw.features) e.engineered = raw.feature_table.names;
  return e;
}

Design assemble(const RawData& raw, const Encoder& encoder, std::span<const std::size_t> rows) {
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(raw.size());
    std::iota(all.begin(), all.end(), 0);
    rows = all;
  }
  Design d;
  d.names = encoder.column_names();
  d.X = Matrix(rows.size(), encoder.width());
  d.y.reserve(rows.size());
  d.cust_ids.reserve(rows.size());
  const bool has_features = raw.features.has_value();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    std::span<const double> eng;
    if (has_features) eng = raw.feature_table.values.row(i);
    encoder.encode_row(raw.kyc[i], eng, d.X.row(r));
    d.y.push_back(raw.labels[i]);
    d.cust_ids.push_back(raw.kyc[i].cust_id);
  }
  return d;
}

Design assemble_matrix(const store::Store& store,
                       const std::optional<store::FeatureSpec>& features, EncodingMode mode,
                       std::span<const std::size_t> train_rows) {
  const RawData raw = load_raw(store, features);
  return assemble(raw, fit_encoder(raw, train_rows, mode));
}

}  // namespace amlrisk::encode
