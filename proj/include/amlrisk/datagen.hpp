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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "amlrisk/schema.hpp"

namespace amlrisk::datagen {

// Signal motifs that shift the high-risk class's feature distributions.
inline constexpr const char* kWireCount = "wire_count";
inline constexpr const char* kYoungAge = "young_age";
inline constexpr const char* kLowTenure = "low_tenure";
inline constexpr const char* kRiskyOccupation = "risky_occupation";

std::vector<std::string> default_countries();
std::map<std::string, double> default_signals();
std::map<std::string, double> zero_signals();

struct GenConfig {
  std::size_t n_customers = 20000;
  double majority_ratio = 0.972;
  std::uint64_t seed = 7;
  std::size_t n_occupations = 250;
  std::vector<std::string> country_list = default_countries();
  std::map<std::string, double> signal_strengths = default_signals();

  // Mean per-customer activity for the low-risk class.
  double wire_rate = 1.0;
  double emt_rate = 3.0;
  double cash_rate = 4.0;
  // Share of transfers whose counterparty is another known customer.
  double internal_counterparty = 0.2;

  void validate() const;  // throws ConfigError naming the field
};

/// Labels are drawn first (exactly round(n * majority_ratio) low-risk rows, in
/// shuffled order), then features conditional on the label. With all signal
/// strengths at 0 the labels are independent of every feature.
SyntheticDataset generate_dataset(const GenConfig& cfg);

/// Writes kyc.csv, cash_trxns.csv, emt_trxns.csv and wire_trxns.csv into `dir`.
void write_csv(const SyntheticDataset& ds, const std::filesystem::path& dir);

/// Reads the four files back (the inverse of write_csv).
SyntheticDataset read_csv(const std::filesystem::path& dir);

}  // namespace amlrisk::datagen
