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

#include "amlrisk/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "amlrisk/common.hpp"
#include "amlrisk/csv.hpp"

namespace amlrisk::datagen {

std::vector<std::string> default_countries() {
  return {"CA", "US", "GB", "CN", "HK", "IN", "MX", "AE", "CH", "KY", "PA", "NG", "RU", "BR", "FR", "DE"};
}

std::map<std::string, double> default_signals() {
  return {{kWireCount, 4.0}, {kYoungAge, 0.6}, {kLowTenure, 0.6}, {kRiskyOccupation, 0.6}};
}

std::map<std::string, double> zero_signals() {
  return {{kWireCount, 0.0}, {kYoungAge, 0.0}, {kLowTenure, 0.0}, {kRiskyOccupation, 0.0}};
}

void GenConfig::validate() const {
  if (n_customers < 1) throw ConfigError("n_customers", "must be positive");
  if (!(majority_ratio > 0.5 && majority_ratio < 1.0)) {
    throw ConfigError("majority_ratio", "must be strictly between 0.5 and 1");
  }
  if (n_occupations < 1) throw ConfigError("n_occupations", "must be at least 1");
  if (country_list.empty()) throw ConfigError("country_list", "must not be empty");
  for (const auto& [motif, strength] : signal_strengths) {
    if (motif != kWireCount && motif != kYoungAge && motif != kLowTenure &&
        motif != kRiskyOccupation) {
      throw ConfigError("signal_strengths." + motif, "unknown motif");
    }
    if (!(strength >= 0.0) || !std::isfinite(strength)) {
      throw ConfigError("signal_strengths." + motif, "must be a finite value >= 0");
    }
  }
  if (!(wire_rate >= 0.0) || !(emt_rate >= 0.0) || !(cash_rate >= 0.0)) {
    throw ConfigError("wire_rate", "activity rates must be >= 0");
  }
  if (!(internal_counterparty >= 0.0 && internal_counterparty <= 1.0)) {
    throw ConfigError("internal_counterparty", "must be in [0, 1]");
  }
}

namespace {

constexpr const char* kFirst[] = {
    "Olivia", "Liam",   "Emma",  "Noah",   "Ava",    "Lucas", "Mia",    "Ethan",  "Sofia", "Mason",
    "Chloe",  "Logan",  "Amir",  "Zara",   "Wei",    "Mei",   "Ravi",   "Priya",  "Omar",  "Leila",
    "Diego",  "Lucia",  "Ivan",  "Anya",   "Kenji",  "Yuki",  "Kwame",  "Ama",    "Jonas", "Elin",
    "Mateo",  "Camila", "Hugo",  "Ines",   "Tariq",  "Nadia", "Hassan", "Fatima", "Arjun", "Sana"};
constexpr const char* kLast[] = {
    "Smith",  "Brown",  "Tremblay", "Martin", "Roy",     "Wilson", "Macdonald", "Gagnon",
    "Lee",    "Chen",   "Wang",     "Singh",  "Patel",   "Khan",   "Nguyen",    "Kim",
    "Garcia", "Lopez",  "Silva",    "Rossi",  "Muller",  "Novak",  "Ivanov",    "Sato",
    "Okafor", "Mensah", "Haddad",   "Cohen",  "Larsen",  "Berg",   "Dubois",    "Moreau",
    "Ali",    "Ahmed",  "Hussein",  "Park",   "Tanaka",  "Costa",  "Ferreira",  "Jensen"};
constexpr const char* kLorem[] = {"lorem",  "ipsum",      "dolor",      "sit",  "amet",
                                  "consectetur", "adipiscing", "elit", "sed",  "do",
                                  "eiusmod", "tempor",    "incididunt", "ut",   "labore"};

constexpr std::size_t kFirstCount = std::size(kFirst);
constexpr std::size_t kLastCount = std::size(kLast);

std::string pool_name(std::size_t i) {
  const std::size_t combos = kFirstCount * kLastCount;
  std::string name = kFirst[i % kFirstCount];
  const std::size_t block = i / combos;
  if (block > 0) {
    name += ' ';
    name += static_cast<char>('A' + (block - 1) % 26);
    if (block > 26) name += std::to_string((block - 1) / 26);
    name += '.';
  }
  name += ' ';
  name += kLast[(i / kFirstCount) % kLastCount];
  return name;
}

std::string padded(const char* prefix, std::size_t value, int width) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, value);
  return buf;
}

// Inverse-CDF Poisson draw: monotone in the mean for a fixed uniform.
std::size_t poisson_quantile(double u, double mean) {
  if (mean <= 0.0) return 0;
  double p = std::exp(-mean);
  double cdf = p;
  std::size_t k = 0;
  while (u > cdf && k < 10000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    if (p == 0.0 && cdf < u) break;
  }
  return k;
}

double signal(const GenConfig& cfg, const char* motif) {
  auto it = cfg.signal_strengths.find(motif);
  return it == cfg.signal_strengths.end() ? 0.0 : it->second;
}

double cents(double v) { return std::round(v * 100.0) / 100.0; }

struct Party {
  std::string id;
  std::string name;
  std::string country;
};

}  // namespace

SyntheticDataset generate_dataset(const GenConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_customers;
  SyntheticDataset ds;
  ds.kyc.resize(n);

  std::mt19937_64 master(derive_seed(cfg.seed, "labels", 0));
  const auto n_low = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.majority_ratio));
  std::vector<int> labels(n, 1);
  std::fill(labels.begin(), labels.begin() + static_cast<long>(n_low), 0);
  std::shuffle(labels.begin(), labels.end(), master);

  std::vector<std::string> occupations(cfg.n_occupations);
  for (std::size_t o = 0; o < cfg.n_occupations; ++o) occupations[o] = padded("occupation_", o, 3);
  std::vector<std::size_t> occ_order(cfg.n_occupations);
  std::iota(occ_order.begin(), occ_order.end(), 0);
  std::shuffle(occ_order.begin(), occ_order.end(), master);
  const std::size_t n_risky = std::max<std::size_t>(1, cfg.n_occupations / 10);

  const std::size_t pool = std::max<std::size_t>(1, (3 * n) / 4);
  const auto& countries = cfg.country_list;
  const std::string& home = countries.front();

  const double s_wire = signal(cfg, kWireCount);
  const double p_young = 1.0 - std::exp(-signal(cfg, kYoungAge));
  const double p_low_tenure = 1.0 - std::exp(-signal(cfg, kLowTenure));
  const double risky_base = static_cast<double>(n_risky) / static_cast<double>(cfg.n_occupations);
  const double p_risky_occ =
      risky_base + (1.0 - risky_base) * (1.0 - std::exp(-signal(cfg, kRiskyOccupation)));

  std::vector<std::string> home_country(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(cfg.seed, "kyc", i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    KycRow& k = ds.kyc[i];
    k.cust_id = padded("CUST", i + 1, 7);
    k.label = labels[i];
    k.name = pool_name(std::uniform_int_distribution<std::size_t>(0, pool - 1)(rng));
    const double g = unit(rng);
    k.gender = g < 0.49 ? "female" : (g < 0.98 ? "male" : "other");

    const bool risky = k.label == 1;
    const double u_occ = unit(rng);
    const double u_occ_pick = unit(rng);
    if (risky && u_occ < p_risky_occ) {
      k.occupation = occupations[occ_order[static_cast<std::size_t>(u_occ_pick * n_risky) % n_risky]];
    } else {
      k.occupation = occupations[static_cast<std::size_t>(u_occ_pick * cfg.n_occupations) % cfg.n_occupations];
    }

    const double u_age = unit(rng);
    const double z_age = normal(rng);
    const double age = (risky && u_age < p_young) ? 18.0 + std::fabs(z_age) * 4.0 : 46.0 + z_age * 16.0;
    k.age = static_cast<int>(std::clamp(std::lround(age), 18L, 92L));

    const double u_ten = unit(rng);
    const double z_ten = normal(rng);
    const double ten = (risky && u_ten < p_low_tenure) ? std::fabs(z_ten) * 1.5 : 14.0 + z_ten * 10.0;
    k.tenur = static_cast<int>(std::clamp(std::lround(ten), 0L, 49L));

    home_country[i] = unit(rng) < 0.85 ? home
                                       : countries[std::uniform_int_distribution<std::size_t>(
                                             0, countries.size() - 1)(rng)];
  }

  std::size_t next_external = 1;
  auto counterparty = [&](std::mt19937_64& rng, std::size_t self) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Party p;
    if (n > 1 && unit(rng) < cfg.internal_counterparty) {
      std::size_t other = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
      if (other >= self) ++other;
      p.id = ds.kyc[other].cust_id;
      p.name = ds.kyc[other].name;
    } else {
      p.id = padded("EXT", next_external++, 7);
      p.name = pool_name(std::uniform_int_distribution<std::size_t>(0, pool - 1)(rng));
    }
    p.country = unit(rng) < 0.5 ? home
                                : countries[std::uniform_int_distribution<std::size_t>(
                                      0, countries.size() - 1)(rng)];
    return p;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const KycRow& k = ds.kyc[i];
    const Party self{k.cust_id, k.name, home_country[i]};

    // Separate streams per customer and table keep extra draws from shifting others.
    std::mt19937_64 wire_rng(derive_seed(cfg.seed, "wire", i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double wire_mean = cfg.wire_rate * (1.0 + (k.label == 1 ? s_wire : 0.0));
    const std::size_t n_wire = poisson_quantile(unit(wire_rng), wire_mean);
    std::lognormal_distribution<double> wire_value(8.0, 1.2);
    for (std::size_t w = 0; w < n_wire; ++w) {
      const bool sent = unit(wire_rng) < 0.5;
      Party other = counterparty(wire_rng, i);
      const Party& from = sent ? self : other;
      const Party& to = sent ? other : self;
      ds.wire.push_back({from.id, to.id, from.name, to.name, cents(wire_value(wire_rng)),
                         from.country, to.country, ""});
    }

    std::mt19937_64 emt_rng(derive_seed(cfg.seed, "emt", i));
    const std::size_t n_emt = poisson_quantile(unit(emt_rng), cfg.emt_rate);
    std::lognormal_distribution<double> emt_value(5.5, 0.9);
    for (std::size_t e = 0; e < n_emt; ++e) {
      const bool sent = unit(emt_rng) < 0.5;
      Party other = counterparty(emt_rng, i);
      const Party& from = sent ? self : other;
      const Party& to = sent ? other : self;
      std::string message;
      const auto words = std::uniform_int_distribution<int>(2, 6)(emt_rng);
      for (int t = 0; t < words; ++t) {
        if (t) message += ' ';
        message += kLorem[std::uniform_int_distribution<std::size_t>(0, std::size(kLorem) - 1)(emt_rng)];
      }
      ds.emt.push_back({from.id, to.id, from.name, to.name, message, cents(emt_value(emt_rng)), ""});
    }

    std::mt19937_64 cash_rng(derive_seed(cfg.seed, "cash", i));
    const std::size_t n_cash = poisson_quantile(unit(cash_rng), cfg.cash_rate);
    std::lognormal_distribution<double> cash_value(6.0, 1.0);
    for (std::size_t c = 0; c < n_cash; ++c) {
      const bool deposit = unit(cash_rng) < 0.55;
      const auto amount = std::max<std::int64_t>(1, std::llround(cash_value(cash_rng)));
      ds.cash.push_back({k.cust_id, amount, deposit ? "deposit" : "withdrawal", ""});
    }
  }

  for (std::size_t t = 0; t < ds.cash.size(); ++t) ds.cash[t].txn_id = padded("CSH", t + 1, 8);
  for (std::size_t t = 0; t < ds.emt.size(); ++t) ds.emt[t].txn_id = padded("EMT", t + 1, 8);
  for (std::size_t t = 0; t < ds.wire.size(); ++t) ds.wire[t].txn_id = padded("WIR", t + 1, 8);
  return ds;
}

namespace {

std::vector<std::string> header_of(std::span<const std::string_view> cols) {
  return {cols.begin(), cols.end()};
}

}  // namespace

void write_csv(const SyntheticDataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory");

  csv::Table kyc{header_of(columns::kyc), {}};
  for (const auto& r : ds.kyc) {
    kyc.rows.push_back({r.name, r.gender, r.occupation, std::to_string(r.age),
                        std::to_string(r.tenur), r.cust_id, std::to_string(r.label)});
  }
  csv::write(dir / kKycFile, kyc);

  csv::Table cash{header_of(columns::cash), {}};
  for (const auto& r : ds.cash) {
    cash.rows.push_back({r.cust_id, std::to_string(r.amount), r.type, r.txn_id});
  }
  csv::write(dir / kCashFile, cash);

  csv::Table emt{header_of(columns::emt), {}};
  for (const auto& r : ds.emt) {
    emt.rows.push_back({r.id_sender, r.id_receiver, r.name_sender, r.name_receiver, r.message,
                        csv::format_double(r.value), r.txn_id});
  }
  csv::write(dir / kEmtFile, emt);

  csv::Table wire{header_of(columns::wire), {}};
  for (const auto& r : ds.wire) {
    wire.rows.push_back({r.id_sender, r.id_receiver, r.name_sender, r.name_receiver,
                         csv::format_double(r.value), r.country_sender, r.country_receiver,
                         r.txn_id});
  }
  csv::write(dir / kWireFile, wire);
}

namespace {

std::vector<std::size_t> require(const csv::Table& t, std::span<const std::string_view> cols) {
  std::vector<std::size_t> idx;
  for (auto c : cols) idx.push_back(t.column(c));
  return idx;
}

template <typename T>
T parse_number(const std::string& text, const std::string& column, std::size_t row) {
  try {
    std::size_t used = 0;
    T v{};
    if constexpr (std::is_same_v<T, double>) v = std::stod(text, &used);
    else v = static_cast<T>(std::stoll(text, &used));
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw SchemaError(column, "row " + std::to_string(row + 2) + ": cannot parse '" + text + "'");
  }
}

}  // namespace

SyntheticDataset read_csv(const std::filesystem::path& dir) {
  SyntheticDataset ds;
  {
    auto t = csv::read(dir / kKycFile);
    auto c = require(t, columns::kyc);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& f = t.rows[r];
      KycRow k{f[c[0]], f[c[1]], f[c[2]], parse_number<int>(f[c[3]], "age", r),
               parse_number<int>(f[c[4]], "tenur", r), f[c[5]], parse_number<int>(f[c[6]], "label", r)};
      if (k.label != 0 && k.label != 1) throw SchemaError("label", "must be 0 or 1");
      ds.kyc.push_back(std::move(k));
    }
  }
  {
    auto t = csv::read(dir / kCashFile);
    auto c = require(t, columns::cash);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& f = t.rows[r];
      ds.cash.push_back({f[c[0]], parse_number<std::int64_t>(f[c[1]], "amount", r), f[c[2]], f[c[3]]});
    }
  }
  {
    auto t = csv::read(dir / kEmtFile);
    auto c = require(t, columns::emt);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& f = t.rows[r];
      ds.emt.push_back({f[c[0]], f[c[1]], f[c[2]], f[c[3]], f[c[4]],
                        parse_number<double>(f[c[5]], "emt value", r), f[c[6]]});
    }
  }
  {
    auto t = csv::read(dir / kWireFile);
    auto c = require(t, columns::wire);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& f = t.rows[r];
      ds.wire.push_back({f[c[0]], f[c[1]], f[c[2]], f[c[3]],
                         parse_number<double>(f[c[4]], "wire value", r), f[c[5]], f[c[6]], f[c[7]]});
    }
  }
  return ds;
}

}  // namespace amlrisk::datagen
