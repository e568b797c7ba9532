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

#include <cmath>
#include <set>

#include "amlrisk/datagen.hpp"
#include "amlrisk/encode.hpp"
#include "support.hpp"

namespace amlrisk::encode {
namespace {

const std::vector<std::string> kGenders{"male", "female", "other", "male"};

TEST(CategoryMap, LexicographicIndices) {
  const auto m = fit_category_map(kGenders);
  EXPECT_EQ(m.categories, (std::vector<std::string>{"female", "male", "other"}));
  EXPECT_EQ(m.find("female"), 0u);
  EXPECT_EQ(m.find("male"), 1u);
  EXPECT_EQ(m.find("other"), 2u);
  EXPECT_FALSE(m.find("unknown").has_value());
  EXPECT_EQ(fit_category_map(std::vector<std::string>{"x", "x"}).size(), 1u);
}

TEST(CategoryMap, TwoHundredFiftyOccupations) {
  datagen::GenConfig c;
  c.n_customers = 20000;
  const auto ds = datagen::generate_dataset(c);
  std::vector<std::string> occ;
  for (const auto& k : ds.kyc) occ.push_back(k.occupation);
  EXPECT_EQ(fit_category_map(occ).size(), 250u);
}

TEST(ApplyEncoding, OneHotAndLabel) {
  const auto m = fit_category_map(kGenders);
  const std::vector<std::string> values{"male", "other", "unknown"};
  const auto oh = apply_encoding(values, m, EncodingMode::OneHot);
  ASSERT_EQ(oh.cols(), 3u);
  EXPECT_EQ(std::vector<double>(oh.row(0).begin(), oh.row(0).end()), (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(std::vector<double>(oh.row(2).begin(), oh.row(2).end()), (std::vector<double>{0, 0, 0}));
  const auto lb = apply_encoding(values, m, EncodingMode::Label);
  ASSERT_EQ(lb.cols(), 1u);
  EXPECT_EQ(lb(0, 0), 1);
  EXPECT_EQ(lb(1, 0), 2);
  EXPECT_EQ(lb(2, 0), 3);
}

TEST(ApplyEncoding, OneHotBlocksSumToOneForKnownValues) {
  const auto m = fit_category_map(kGenders);
  const auto oh = apply_encoding(kGenders, m, EncodingMode::OneHot);
  for (std::size_t r = 0; r < oh.rows(); ++r) {
    double s = 0;
    for (double v : oh.row(r)) s += v;
    EXPECT_EQ(s, 1.0);
  }
}

TEST(EncodingMode, Parse) {
  EXPECT_EQ(encoding_mode_from_string("label"), EncodingMode::Label);
  EXPECT_EQ(encoding_mode_from_string("onehot"), EncodingMode::OneHot);
  EXPECT_THROW(encoding_mode_from_string("ordinal"), ParameterError);
}

SyntheticDataset default_dataset(std::size_t n) {
  datagen::GenConfig c;
  c.n_customers = n;
  return datagen::generate_dataset(c);
}

TEST(Assemble, ColumnCounts) {
  const auto ds = default_dataset(20000);
  store::Store db(":memory:");
  db.ingest(ds);
  std::set<std::string> genders;
  for (const auto& k : ds.kyc) genders.insert(k.gender);
  ASSERT_EQ(genders.size(), 3u);
  EXPECT_EQ(assemble_matrix(db, std::nullopt, EncodingMode::Label).X.cols(), 4u);
  const auto oh = assemble_matrix(db, std::nullopt, EncodingMode::OneHot);
  EXPECT_EQ(oh.X.cols(), 255u);
  EXPECT_EQ(oh.names.size(), 255u);
  EXPECT_EQ(oh.names[0], "gender=female");
  const auto v2 = assemble_matrix(db, store::FeatureSpec{store::FeatureVersion::V2, {}}, EncodingMode::Label);
  EXPECT_EQ(v2.X.cols(), 28u);
  EXPECT_EQ(v2.names[0], "gender");
  EXPECT_EQ(v2.names[1], "occupation");
  EXPECT_EQ(v2.names[2], "age");
  EXPECT_EQ(v2.names[3], "tenur");
  EXPECT_EQ(v2.names[4], "wire_sent_cnt");
  for (double v : v2.X.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Assemble, EncoderFittedOnTrainingRowsOnly) {
  auto ds = testing::random_toy_dataset(3);
  ds.kyc.back().occupation = "only_in_test";
  store::Store db(":memory:");
  db.ingest(ds);
  const auto raw = load_raw(db, std::nullopt);
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw.kyc[i].occupation != "only_in_test") train.push_back(i);
  }
  const auto enc = fit_encoder(raw, train, EncodingMode::OneHot);
  EXPECT_FALSE(enc.occupation.find("only_in_test").has_value());
  const auto before = enc;
  const auto d = assemble(raw, enc);
  EXPECT_EQ(enc, before);
  EXPECT_EQ(d.X.rows(), raw.size());
}

TEST(Assemble, LabelsAreEffectiveLabels) {
  const auto ds = testing::random_toy_dataset(6);
  store::Store db(":memory:");
  db.ingest(ds);
  const std::string id = ds.kyc[0].cust_id;
  db.record_label(id, 1 - ds.kyc[0].label, "analyst");
  const auto d = assemble_matrix(db, std::nullopt, EncodingMode::Label);
  const auto at = std::find(d.cust_ids.begin(), d.cust_ids.end(), id) - d.cust_ids.begin();
  EXPECT_EQ(d.y[static_cast<std::size_t>(at)], 1 - ds.kyc[0].label);
}

TEST(Assemble, StoreAndDatasetAgree) {
  const auto ds = default_dataset(500);
  store::Store db(":memory:");
  db.ingest(ds);
  const store::FeatureSpec spec{store::FeatureVersion::V2, {}};
  const auto a = load_raw(db, spec);
  const auto b = load_raw(ds, spec);
  EXPECT_EQ(a.kyc, b.kyc);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.feature_table.values, b.feature_table.values);
}

TEST(Encoder, RowMatchesMatrix) {
  const auto ds = default_dataset(300);
  const auto raw = load_raw(ds, store::FeatureSpec{store::FeatureVersion::V1, {}});
  const auto enc = fit_encoder(raw, {}, EncodingMode::OneHot);
  const auto d = assemble(raw, enc);
  for (std::size_t r = 0; r < raw.size(); r += 17) {
    const auto row = enc.encode_row(raw.kyc[r], raw.feature_table.values.row(r));
    EXPECT_TRUE(std::equal(row.begin(), row.end(), d.X.row(r).begin()));
  }
}

}  // namespace
}  // namespace amlrisk::encode
