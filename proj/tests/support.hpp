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

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "amlrisk/schema.hpp"
#include "amlrisk/trees.hpp"

namespace amlrisk::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("amlrisk_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Small random store: a handful of customers, external counterparties, countries
// inside and outside a four-code list, and some customers with no activity.
inline SyntheticDataset random_toy_dataset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto unit = [&] { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); };
  const char* countries[] = {"CA", "US", "GB", "FR", "ZZ", "QQ"};
  SyntheticDataset ds;
  const std::size_t n = 3 + pick(10);
  for (std::size_t i = 0; i < n; ++i) {
    KycRow k;
    k.cust_id = "C" + std::to_string(100 + i);
    k.name = "n" + std::to_string(pick(4));
    k.gender = pick(2) ? "male" : "female";
    k.occupation = "occ" + std::to_string(pick(3));
    k.age = 18 + static_cast<int>(pick(60));
    k.tenur = static_cast<int>(pick(30));
    k.label = unit() < 0.3;
    ds.kyc.push_back(k);
  }
  auto party = [&] {
    return unit() < 0.7 ? ds.kyc[pick(n)].cust_id : "X" + std::to_string(pick(5));
  };
  const std::size_t n_cash = pick(25);
  for (std::size_t t = 0; t < n_cash; ++t) {
    ds.cash.push_back({ds.kyc[pick(n)].cust_id, 1 + static_cast<std::int64_t>(pick(5000)),
                       pick(2) ? "deposit" : "withdrawal", "S" + std::to_string(t)});
  }
  const std::size_t n_emt = pick(25);
  for (std::size_t t = 0; t < n_emt; ++t) {
    EmtRow e;
    e.id_sender = party();
    e.id_receiver = unit() < 0.5 ? ds.kyc[pick(n)].cust_id : party();
    e.name_sender = "a";
    e.name_receiver = "b";
    e.message = "m";
    e.value = std::round(unit() * 100000.0) / 100.0 + 0.01;
    e.txn_id = "E" + std::to_string(t);
    ds.emt.push_back(e);
  }
  const std::size_t n_wire = pick(25);
  for (std::size_t t = 0; t < n_wire; ++t) {
    WireRow w;
    w.id_sender = party();
    w.id_receiver = unit() < 0.5 ? ds.kyc[pick(n)].cust_id : party();
    w.name_sender = "a";
    w.name_receiver = "b";
    w.value = std::round(unit() * 1e7) / 100.0 + 0.01;
    w.country_sender = countries[pick(6)];
    w.country_receiver = countries[pick(6)];
    w.txn_id = "W" + std::to_string(t);
    ds.wire.push_back(w);
  }
  return ds;
}

// Random tree over `n_features` features, thresholds in (0, 1), leaf values in
// [-2, 2] and covers that add up from the leaves.
inline trees::Tree random_tree(std::mt19937_64& rng, std::size_t n_features, int max_depth) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  trees::Tree t;
  auto grow = [&](auto&& self, int depth) -> int {
    const int idx = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    const bool split = depth < max_depth && (depth == 0 || unit(rng) < 0.7);
    if (!split) {
      t.nodes[idx].value = unit(rng) * 4.0 - 2.0;
      t.nodes[idx].cover = 1.0 + std::floor(unit(rng) * 20.0);
      return idx;
    }
    const int f = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, n_features - 1)(rng));
    const double thr = 0.05 + 0.9 * unit(rng);
    const int l = self(self, depth + 1);
    const int r = self(self, depth + 1);
    auto& n = t.nodes[idx];
    n.feature = f;
    n.threshold = thr;
    n.left = l;
    n.right = r;
    n.cover = t.nodes[l].cover + t.nodes[r].cover;
    return idx;
  };
  grow(grow, 0);
  return t;
}

inline trees::TreeEnsemble random_ensemble(std::mt19937_64& rng, std::size_t n_features, int max_depth,
                                           std::size_t n_trees, trees::ModelKind kind) {
  trees::TreeEnsemble m;
  m.kind = kind;
  m.n_features = n_features;
  for (std::size_t i = 0; i < n_features; ++i) m.feature_names.push_back("f" + std::to_string(i));
  for (std::size_t i = 0; i < n_trees; ++i) m.trees.push_back(random_tree(rng, n_features, max_depth));
  if (kind == trees::ModelKind::GBDT) {
    m.params = trees::GbdtParams{};
    m.base_score = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  }
  return m;
}

inline std::vector<double> random_row(std::mt19937_64& rng, std::size_t n_features) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> row(n_features);
  for (auto& v : row) v = unit(rng);
  return row;
}

}  // namespace amlrisk::testing
