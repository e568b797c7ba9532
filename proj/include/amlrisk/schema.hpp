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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace amlrisk {

// Column names of the four source tables, spelled exactly as the source files.
namespace columns {
inline constexpr std::array<std::string_view, 7> kyc{"name",   "gender",  "occupation", "age",
                                                     "tenur",  "cust_id", "label"};
inline constexpr std::array<std::string_view, 4> cash{"cust_id", "amount", "type", "txn_id"};
inline constexpr std::array<std::string_view, 7> emt{"id sender",   "id receiver", "name sender",
                                                     "name receiver", "emt message", "emt value",
                                                     "txn_id"};
inline constexpr std::array<std::string_view, 8> wire{
    "id sender",    "id receiver",   "name sender",      "name receiver",
    "wire value",   "country sender", "country receiver", "txn_id"};
}  // namespace columns

inline constexpr std::string_view kKycFile = "kyc.csv";
inline constexpr std::string_view kCashFile = "cash_trxns.csv";
inline constexpr std::string_view kEmtFile = "emt_trxns.csv";
inline constexpr std::string_view kWireFile = "wire_trxns.csv";

struct KycRow {
  std::string name;
  std::string gender;  // female | male | other
  std::string occupation;
  int age = 0;
  int tenur = 0;
  std::string cust_id;
  int label = 0;  // 1 = high risk
  friend bool operator==(const KycRow&, const KycRow&) = default;
};

struct CashRow {
  std::string cust_id;
  std::int64_t amount = 0;
  std::string type;  // deposit | withdrawal
  std::string txn_id;
  friend bool operator==(const CashRow&, const CashRow&) = default;
};

struct EmtRow {
  std::string id_sender;
  std::string id_receiver;
  std::string name_sender;
  std::string name_receiver;
  std::string message;
  double value = 0.0;
  std::string txn_id;
  friend bool operator==(const EmtRow&, const EmtRow&) = default;
};

struct WireRow {
  std::string id_sender;
  std::string id_receiver;
  std::string name_sender;
  std::string name_receiver;
  double value = 0.0;
  std::string country_sender;
  std::string country_receiver;
  std::string txn_id;
  friend bool operator==(const WireRow&, const WireRow&) = default;
};

struct SyntheticDataset {
  std::vector<KycRow> kyc;
  std::vector<CashRow> cash;
  std::vector<EmtRow> emt;
  std::vector<WireRow> wire;
  friend bool operator==(const SyntheticDataset&, const SyntheticDataset&) = default;
};

}  // namespace amlrisk
