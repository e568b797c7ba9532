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

#include <thread>

#include "amlrisk/datagen.hpp"
#include "amlrisk/store.hpp"
#include "support.hpp"

namespace amlrisk::store {
namespace {

SyntheticDataset customer_a() {
  SyntheticDataset ds;
  ds.kyc = {{"Alice", "female", "clerk", 30, 4, "A", 0}, {"Bob", "male", "chef", 50, 9, "B", 1}};
  ds.cash = {{"A", 100, "deposit", "c1"}, {"A", 50, "deposit", "c2"}, {"A", 30, "withdrawal", "c3"}};
  ds.wire = {{"A", "EXT1", "Alice", "Zed", 200.0, "CA", "US", "w1"}};
  ds.emt = {{"EXT2", "A", "Yan", "Alice", "hi", 75.0, "e1"}};
  return ds;
}

double value(const FeatureTable& t, const std::string& cust, const std::string& name) {
  const auto r = std::find(t.cust_ids.begin(), t.cust_ids.end(), cust) - t.cust_ids.begin();
  const auto c = std::find(t.names.begin(), t.names.end(), name) - t.names.begin();
  return t.values(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
}

TEST(FeatureNames, Counts) {
  EXPECT_EQ(feature_names({FeatureVersion::V1, {}}).size(), 14u);
  EXPECT_EQ(feature_names({FeatureVersion::V2, {}}).size(), 24u);
  EXPECT_EQ(feature_names({FeatureVersion::V3, {"CA", "US", "GB", "FR", "DE"}}).size(), 36u);
  const auto v1 = feature_names({FeatureVersion::V1, {}});
  const auto v2 = feature_names({FeatureVersion::V2, {}});
  EXPECT_TRUE(std::equal(v1.begin(), v1.end(), v2.begin()));
}

TEST(FeatureSpec, RejectsBadCountryLists) {
  EXPECT_THROW((FeatureSpec{FeatureVersion::V3, {}}).validate(), ParameterError);
  EXPECT_THROW((FeatureSpec{FeatureVersion::V3, {"CA", "CA"}}).validate(), ParameterError);
  EXPECT_THROW((FeatureSpec{FeatureVersion::V3, {"NAN"}}).validate(), ParameterError);
  EXPECT_THROW(feature_version_from_string("v9"), ParameterError);
}

TEST(BuildFeatures, HandComputedCustomer) {
  Store db(":memory:");
  db.ingest(customer_a());
  const auto v1 = db.build_features({FeatureVersion::V1, {}});
  EXPECT_EQ(value(v1, "A", "cash_dep_cnt"), 2);
  EXPECT_EQ(value(v1, "A", "cash_dep_amt"), 150);
  EXPECT_EQ(value(v1, "A", "cash_wd_cnt"), 1);
  EXPECT_EQ(value(v1, "A", "cash_wd_amt"), 30);
  EXPECT_EQ(value(v1, "A", "wire_sent_cnt"), 1);
  EXPECT_EQ(value(v1, "A", "wire_sent_amt"), 200);
  EXPECT_EQ(value(v1, "A", "wire_sent_intl_cnt"), 1);
  EXPECT_EQ(value(v1, "A", "emt_recv_cnt"), 1);
  EXPECT_EQ(value(v1, "A", "emt_recv_amt"), 75);
  for (const char* z : {"wire_recv_cnt", "wire_recv_amt", "wire_recv_intl_cnt", "emt_sent_cnt", "emt_sent_amt"}) {
    EXPECT_EQ(value(v1, "A", z), 0) << z;
  }
  const auto v2 = db.build_features({FeatureVersion::V2, {}});
  EXPECT_EQ(value(v2, "A", "cash_balance"), 120);
  EXPECT_EQ(value(v2, "A", "wire_balance"), -200);
  EXPECT_EQ(value(v2, "A", "emt_balance"), 75);
  EXPECT_EQ(value(v2, "A", "wire_total_cnt"), 1);
  EXPECT_EQ(value(v2, "A", "intl_total_cnt"), 1);
  for (std::size_t c = 0; c < v2.names.size(); ++c) EXPECT_EQ(value(v2, "B", v2.names[c]), 0);

  const auto v3 = db.build_features({FeatureVersion::V3, {"CA", "GB"}});
  EXPECT_EQ(value(v3, "A", "wire_sent_cnt_NAN"), 1);
  EXPECT_EQ(value(v3, "A", "wire_sent_cnt_CA"), 0);
}

TEST(BuildFeatures, SingleCustomerMatchesFullTable) {
  const auto ds = datagen::generate_dataset([] {
    datagen::GenConfig c;
    c.n_customers = 300;
    return c;
  }());
  Store db(":memory:");
  db.ingest(ds);
  const FeatureSpec spec{FeatureVersion::V3, db.top_countries()};
  const auto full = db.build_features(spec);
  for (std::size_t r = 0; r < full.cust_ids.size(); r += 37) {
    const auto one = db.build_features(spec, full.cust_ids[r]);
    ASSERT_EQ(one.cust_ids.size(), 1u);
    for (std::size_t c = 0; c < full.names.size(); ++c) EXPECT_EQ(one.values(0, c), full.values(r, c));
  }
  EXPECT_THROW(db.build_features(spec, std::string("NOPE")), NotFoundError);
}

TEST(BuildFeatures, MatchesOracleOnToyStores) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ds = testing::random_toy_dataset(seed);
    Store db(":memory:");
    db.ingest(ds);
    for (const FeatureSpec& spec : {FeatureSpec{FeatureVersion::V1, {}}, FeatureSpec{FeatureVersion::V2, {}},
                                    FeatureSpec{FeatureVersion::V3, {"CA", "US", "GB", "FR"}}}) {
      const auto a = db.build_features(spec);
      const auto b = features_oracle(ds, spec);
      EXPECT_EQ(a.names, b.names);
      EXPECT_EQ(a.cust_ids, b.cust_ids);
      EXPECT_EQ(a.values, b.values);
    }
  }
}

TEST(BuildFeatures, SentCountsSumToKnownSenders) {
  const auto ds = testing::random_toy_dataset(99);
  Store db(":memory:");
  db.ingest(ds);
  const auto t = db.build_features({FeatureVersion::V1, {}});
  std::set<std::string> ids;
  for (const auto& k : ds.kyc) ids.insert(k.cust_id);
  double sent = 0, recv = 0;
  for (const auto& w : ds.wire) {
    sent += ids.count(w.id_sender);
    recv += ids.count(w.id_receiver);
  }
  double s = 0, r = 0;
  for (std::size_t i = 0; i < t.cust_ids.size(); ++i) {
    s += value(t, t.cust_ids[i], "wire_sent_cnt");
    r += value(t, t.cust_ids[i], "wire_recv_cnt");
  }
  EXPECT_EQ(s, sent);
  EXPECT_EQ(r, recv);
}

TEST(Store, DuplicateCustomerRejectedAtomically) {
  Store db(":memory:");
  auto ds = customer_a();
  ds.kyc.push_back(ds.kyc.front());
  EXPECT_THROW(db.ingest(ds), IntegrityError);
  EXPECT_EQ(db.row_count("kyc"), 0u);
  EXPECT_EQ(db.row_count("cash_trxns"), 0u);
}

TEST(Store, ChecksumsStableAcrossReingest) {
  const auto ds = testing::random_toy_dataset(5);
  Store a(":memory:"), b(":memory:");
  a.ingest(ds);
  b.ingest(ds);
  for (const char* t : {"kyc", "cash_trxns", "emt_trxns", "wire_trxns"}) {
    EXPECT_EQ(a.table_checksum(t), b.table_checksum(t)) << t;
  }
  EXPECT_EQ(a.data_fingerprint(), b.data_fingerprint());
}

TEST(Store, MaterializeAndRead) {
  const auto dir = testing::temp_dir("store_file");
  const auto ds = testing::random_toy_dataset(8);
  {
    Store db(dir / "s.db");
    db.ingest(ds);
    db.materialize_features({FeatureVersion::V2, {}});
  }
  Store db(dir / "s.db");
  const auto t = db.read_features(FeatureVersion::V2);
  EXPECT_EQ(t.values, db.build_features({FeatureVersion::V2, {}}).values);
  EXPECT_EQ(db.row_count("features_v2"), ds.kyc.size());
  EXPECT_THROW(db.read_features(FeatureVersion::V1), NotFoundError);
  std::filesystem::remove_all(dir);
}

TEST(LabelEvents, AppendOnlyAndEffective) {
  Store db(":memory:");
  db.ingest(customer_a());
  EXPECT_EQ(db.last_event_id(), 0);
  const auto e1 = db.record_label("A", 1, "analyst");
  const auto e2 = db.record_label("A", 1, "analyst");
  EXPECT_GT(e2, e1);
  EXPECT_EQ(db.events_since(0), 2u);
  EXPECT_EQ(db.events_since(e1), 1u);
  EXPECT_THROW(db.record_label("A", 2, "x"), ValidationError);
  EXPECT_THROW(db.record_label("ZZZ", 1, "x"), NotFoundError);
  EXPECT_EQ(db.customer("A")->label, 0);
  const auto eff = db.effective_labels();
  EXPECT_EQ(eff.at("A"), 1);
  EXPECT_EQ(eff.at("B"), 1);
  db.record_label("B", 0, "analyst");
  EXPECT_EQ(db.effective_labels(std::vector<std::string>{"A", "B"}), (std::vector<int>{1, 0}));
  EXPECT_EQ(db.label_history("A").size(), 2u);

  std::map<std::string, int> replay;
  for (const auto& k : db.kyc()) replay[k.cust_id] = k.label;
  for (const auto& e : db.label_events()) replay[e.cust_id] = e.new_label;
  EXPECT_EQ(replay, db.effective_labels());
}

TEST(Profile, MassAndClasses) {
  SyntheticDataset ds;
  ds.kyc = {{"a", "female", "o1", 20, 1, "C1", 0},
            {"a", "male", "o1", 35, 12, "C2", 1},
            {"b", "male", "o2", 60, 30, "C3", 0},
            {"c", "other", "o2", 90, 49, "C4", 1}};
  Store db(":memory:");
  db.ingest(ds);
  const auto p = db.profile();
  EXPECT_EQ(p.n_customers, 4u);
  EXPECT_EQ(p.age.total(), 4u);
  EXPECT_EQ(p.tenur.total(), 4u);
  EXPECT_EQ(p.classes.label0, 2u);
  EXPECT_EQ(p.repeated_name_classes.label0 + p.repeated_name_classes.label1, 2u);
  EXPECT_DOUBLE_EQ(p.classes.majority_fraction, 0.5);

  Store empty(":memory:");
  EXPECT_THROW(empty.profile(), ValidationError);
}

TEST(Profile, AllNegativeMeansNoRisk) {
  auto ds = testing::random_toy_dataset(4);
  for (auto& k : ds.kyc) k.label = 0;
  Store db(":memory:");
  db.ingest(ds);
  for (const auto& o : db.profile().top_occupations) EXPECT_EQ(o.risky_fraction, 0.0);
}

TEST(Profile, DefaultConfigMajorityFraction) {
  datagen::GenConfig c;
  c.n_customers = 2000;
  Store db(":memory:");
  db.ingest(datagen::generate_dataset(c));
  EXPECT_NEAR(db.profile().classes.majority_fraction, 0.972, 1.0 / 2000);
}

TEST(Store, ConcurrentReadersAndWriter) {
  datagen::GenConfig c;
  c.n_customers = 200;
  Store db(":memory:");
  db.ingest(datagen::generate_dataset(c));
  const FeatureSpec spec{FeatureVersion::V2, {}};
  const auto expected = db.build_features(spec);
  std::atomic<int> mismatches{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 3; ++t) {
    readers.emplace_back([&] {
      for (int i = 0; i < 5; ++i) mismatches += db.build_features(spec).values != expected.values;
    });
  }
  for (int i = 0; i < 20; ++i) db.record_label("CUST0000001", i % 2, "t");
  for (auto& r : readers) r.join();
  EXPECT_EQ(mismatches.load(), 0);
  EXPECT_EQ(db.events_since(0), 20u);
}

TEST(Registry, RegisterAndFetch) {
  Store db(":memory:");
  ModelRecord meta;
  meta.created_at = utc_now_iso();
  meta.feature_version = "v2";
  const auto id1 = db.register_model(meta, [](std::int64_t id) { return "artifact-" + std::to_string(id); });
  const auto id2 = db.register_model(meta, [](std::int64_t id) { return "artifact-" + std::to_string(id); });
  EXPECT_EQ(id2, id1 + 1);
  EXPECT_EQ(db.model(id1)->artifact, "artifact-" + std::to_string(id1));
  EXPECT_EQ(db.latest_model()->version_id, id2);
  EXPECT_EQ(db.models().size(), 2u);
  EXPECT_FALSE(db.model(999).has_value());
}

}  // namespace
}  // namespace amlrisk::store
