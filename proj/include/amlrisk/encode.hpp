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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amlrisk/common.hpp"
#include "amlrisk/schema.hpp"
#include "amlrisk/store.hpp"

namespace amlrisk::encode {

enum class EncodingMode { Label, OneHot };

std::string to_string(EncodingMode m);
// "label" or "onehot" (also "one-hot"); throws ParameterError otherwise.
EncodingMode encoding_mode_from_string(const std::string& s);

/// Sorted distinct categories with contiguous indices from 0.
struct CategoryMap {
  std::vector<std::string> categories;

  std::size_t size() const noexcept { return categories.size(); }
  std::optional<std::size_t> find(const std::string& value) const;
  friend bool operator==(const CategoryMap&, const CategoryMap&) = default;
};

CategoryMap fit_category_map(std::span<const std::string> values);

/// Label: one column holding the category index, |map| for unseen values.
/// OneHot: |map| indicator columns, all zero for unseen values.
Matrix apply_encoding(std::span<const std::string> values, const CategoryMap& map,
                      EncodingMode mode);

// Writes the encoding of one value into `out` (width 1 or |map|).
void encode_value(const std::string& value, const CategoryMap& map, EncodingMode mode,
                  std::span<double> out);

/// Encoder for the KYC columns: gender and occupation encoded, age and tenur passed
/// through, followed by any engineered feature columns.
struct Encoder {
  EncodingMode mode = EncodingMode::OneHot;
  CategoryMap gender;
  CategoryMap occupation;
  std::vector<std::string> engineered;  // engineered feature names, appended in order

  std::size_t width() const;
  std::vector<std::string> column_names() const;
  void encode_row(const KycRow& kyc, std::span<const double> engineered_values,
                  std::span<double> out) const;
  std::vector<double> encode_row(const KycRow& kyc,
                                 std::span<const double> engineered_values) const;
  friend bool operator==(const Encoder&, const Encoder&) = default;
};

/// Inputs shared by every run of an experiment: KYC rows ordered by cust_id,
/// optional engineered features aligned with them, and effective labels.
struct RawData {
  std::vector<KycRow> kyc;
  std::optional<store::FeatureSpec> features;
  store::FeatureTable feature_table;  // empty when features is nullopt
  Labels labels;

  std::size_t size() const noexcept { return kyc.size(); }
};

/// Loads KYC rows, engineered features for `features` (KYC only when nullopt) and
/// effective labels. Throws IntegrityError if a customer lacks a feature row.
RawData load_raw(const store::Store& store, const std::optional<store::FeatureSpec>& features);
RawData load_raw(const SyntheticDataset& ds, const std::optional<store::FeatureSpec>& features);

/// Fits the category maps on `train_rows` only.
Encoder fit_encoder(const RawData& raw, std::span<const std::size_t> train_rows,
                    EncodingMode mode);

struct Design {
  Matrix X;
  Labels y;
  std::vector<std::string> names;
  std::vector<std::string> cust_ids;
};

/// Design matrix for `rows` of `raw` (all rows when empty).
Design assemble(const RawData& raw, const Encoder& encoder,
                std::span<const std::size_t> rows = {});

/// Loads the store, fits the encoder on `train_rows` (all rows when empty) and
/// assembles the full design matrix.
Design assemble_matrix(const store::Store& store,
                       const std::optional<store::FeatureSpec>& features, EncodingMode mode,
                       std::span<const std::size_t> train_rows = {});

}  // namespace amlrisk::encode
