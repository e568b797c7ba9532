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

#include "amlrisk/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <set>
#include <unordered_map>

#include "amlrisk/datagen.hpp"

namespace amlrisk::store {

std::string to_string(FeatureVersion v) {
  switch (v) {
    case FeatureVersion::V1: return "v1";
    case FeatureVersion::V2: return "v2";
    case FeatureVersion::V3: return "v3";
  }
  throw ParameterError("unknown feature version");
}

FeatureVersion feature_version_from_string(const std::string& s) {
  if (s == "v1" || s == "V1") return FeatureVersion::V1;
  if (s == "v2" || s == "V2") return FeatureVersion::V2;
  if (s == "v3" || s == "V3") return FeatureVersion::V3;
  throw ParameterError("unknown feature version '" + s + "' (expected v1, v2 or v3)");
}

std::string feature_table_name(FeatureVersion v) { return "features_" + to_string(v); }

void FeatureSpec::validate() const {
  if (version != FeatureVersion::V3) return;
  if (countries.empty()) throw ParameterError("V3 country list must not be empty");
  std::set<std::string> seen;
  for (const auto& c : countries) {
    if (c.empty()) throw ParameterError("V3 country list contains an empty code");
    if (c == kNanCountry) throw ParameterError("V3 country list must not contain NAN");
    if (!seen.insert(c).second) throw ParameterError("duplicate country '" + c + "' in V3 list");
  }
}

namespace {

const std::vector<std::string> kV1Names = {
    "wire_sent_cnt",      "wire_sent_amt",      "wire_recv_cnt", "wire_recv_amt",
    "wire_sent_intl_cnt", "wire_recv_intl_cnt", "emt_sent_cnt",  "emt_sent_amt",
    "emt_recv_cnt",       "emt_recv_amt",       "cash_dep_cnt",  "cash_dep_amt",
    "cash_wd_cnt",        "cash_wd_amt"};
const std::vector<std::string> kV2Extra = {
    "wire_total_cnt", "wire_total_amt", "emt_total_cnt", "emt_total_amt", "cash_total_cnt",
    "cash_total_amt", "intl_total_cnt", "wire_balance",  "emt_balance",   "cash_balance"};

std::string quote_ident(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string quote_literal(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

// RAII prepared statement.
class Stmt {
 public:
  Stmt(sqlite3* db, const std::string& sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql.c_str(), static_cast<int>(sql.size()), &st_, nullptr) !=
        SQLITE_OK) {
      throw IoError("sqlite", std::string("prepare failed: ") + sqlite3_errmsg(db));
    }
  }
  ~Stmt() { sqlite3_finalize(st_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, const std::string& v) {
    sqlite3_bind_text(st_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(st_, i, v);
    return *this;
  }
  Stmt& bind(int i, int v) { return bind(i, static_cast<std::int64_t>(v)); }
  Stmt& bind(int i, double v) {
    sqlite3_bind_double(st_, i, v);
    return *this;
  }

  // True while a row is available.
  bool step() {
    const int rc = sqlite3_step(st_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    if ((rc & 0xff) == SQLITE_CONSTRAINT) {
      throw IntegrityError(std::string("constraint violated: ") + sqlite3_errmsg(db_));
    }
    throw IoError("sqlite", std::string("step failed: ") + sqlite3_errmsg(db_));
  }
  void run() {
    step();
    sqlite3_reset(st_);
    sqlite3_clear_bindings(st_);
  }

  std::string text(int c) const {
    const auto* p = sqlite3_column_text(st_, c);
    return p ? std::string(reinterpret_cast<const char*>(p),
                           static_cast<std::size_t>(sqlite3_column_bytes(st_, c)))
             : std::string();
  }
  std::int64_t i64(int c) const { return sqlite3_column_int64(st_, c); }
  double real(int c) const { return sqlite3_column_double(st_, c); }
  int columns() const { return sqlite3_column_count(st_); }
  int type(int c) const { return sqlite3_column_type(st_, c); }

 private:
  sqlite3* db_;
  sqlite3_stmt* st_ = nullptr;
};

const char* key_of(const std::string& table) {
  if (table == "kyc") return "cust_id";
  if (table == "cash_trxns" || table == "emt_trxns" || table == "wire_trxns") return "txn_id";
  if (table == "label_events") return "event_id";
  if (table == "model_registry") return "version_id";
  if (table.rfind("features_", 0) == 0) return "cust_id";
  throw ParameterError("unknown table '" + table + "'");
}

}  // namespace

std::vector<std::string> feature_names(const FeatureSpec& spec) {
  spec.validate();
  std::vector<std::string> names = kV1Names;
  if (spec.version == FeatureVersion::V1) return names;
  names.insert(names.end(), kV2Extra.begin(), kV2Extra.end());
  if (spec.version == FeatureVersion::V2) return names;
  for (const char* dir : {"wire_sent_cnt_", "wire_recv_cnt_"}) {
    for (const auto& c : spec.countries) names.push_back(dir + c);
    names.push_back(std::string(dir) + kNanCountry);
  }
  return names;
}

std::size_t Histogram::total() const {
  std::size_t t = 0;
  for (auto v : label0) t += v;
  for (auto v : label1) t += v;
  return t;
}

std::string utc_now_iso() {
  const auto now = std::chrono::system_clock::now();
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms % 1000));
  return buf;
}

double unix_now() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

const std::vector<std::string>& Store::schema_ddl() {
  static const std::vector<std::string> ddl = {
      "CREATE TABLE IF NOT EXISTS kyc (name TEXT NOT NULL, gender TEXT NOT NULL, occupation "
      "TEXT NOT NULL, age INTEGER NOT NULL, tenur INTEGER NOT NULL, cust_id TEXT PRIMARY KEY, "
      "label INTEGER NOT NULL CHECK (label IN (0, 1)))",
      "CREATE TABLE IF NOT EXISTS cash_trxns (cust_id TEXT NOT NULL, amount INTEGER NOT NULL, "
      "type TEXT NOT NULL, txn_id TEXT NOT NULL UNIQUE)",
      "CREATE TABLE IF NOT EXISTS emt_trxns (\"id sender\" TEXT NOT NULL, \"id receiver\" TEXT "
      "NOT NULL, \"name sender\" TEXT, \"name receiver\" TEXT, \"emt message\" TEXT, \"emt "
      "value\" REAL NOT NULL, txn_id TEXT NOT NULL UNIQUE)",
      "CREATE TABLE IF NOT EXISTS wire_trxns (\"id sender\" TEXT NOT NULL, \"id receiver\" "
      "TEXT NOT NULL, \"name sender\" TEXT, \"name receiver\" TEXT, \"wire value\" REAL NOT "
      "NULL, \"country sender\" TEXT NOT NULL, \"country receiver\" TEXT NOT NULL, txn_id TEXT "
      "NOT NULL UNIQUE)",
      "CREATE INDEX IF NOT EXISTS cash_cust ON cash_trxns (cust_id)",
      "CREATE INDEX IF NOT EXISTS emt_sender ON emt_trxns (\"id sender\")",
      "CREATE INDEX IF NOT EXISTS emt_receiver ON emt_trxns (\"id receiver\")",
      "CREATE INDEX IF NOT EXISTS wire_sender ON wire_trxns (\"id sender\")",
      "CREATE INDEX IF NOT EXISTS wire_receiver ON wire_trxns (\"id receiver\")",
      "CREATE TABLE IF NOT EXISTS label_events (event_id INTEGER PRIMARY KEY AUTOINCREMENT, "
      "cust_id TEXT NOT NULL REFERENCES kyc (cust_id), new_label INTEGER NOT NULL CHECK "
      "(new_label IN (0, 1)), source TEXT NOT NULL, timestamp TEXT NOT NULL)",
      "CREATE INDEX IF NOT EXISTS label_events_cust ON label_events (cust_id, event_id)",
      "CREATE TRIGGER IF NOT EXISTS label_events_no_update BEFORE UPDATE ON label_events "
      "BEGIN SELECT RAISE(ABORT, 'label_events is append-only'); END",
      "CREATE TRIGGER IF NOT EXISTS label_events_no_delete BEFORE DELETE ON label_events "
      "BEGIN SELECT RAISE(ABORT, 'label_events is append-only'); END",
      "CREATE TABLE IF NOT EXISTS model_registry (version_id INTEGER PRIMARY KEY "
      "AUTOINCREMENT, created_at TEXT NOT NULL, created_unix REAL NOT NULL, feature_version "
      "TEXT NOT NULL, fingerprint TEXT NOT NULL, metrics TEXT NOT NULL, label_watermark "
      "INTEGER NOT NULL, artifact TEXT NOT NULL)",
  };
  return ddl;
}

namespace {

void exact_sum_step(sqlite3_context* ctx, int, sqlite3_value** argv) {
  if (sqlite3_value_type(argv[0]) == SQLITE_NULL) return;
  auto** slot = static_cast<ExactSum**>(sqlite3_aggregate_context(ctx, sizeof(ExactSum*)));
  if (!slot) {
    sqlite3_result_error_nomem(ctx);
    return;
  }
  if (!*slot) *slot = new ExactSum();
  (*slot)->add(sqlite3_value_double(argv[0]));
}

void exact_sum_final(sqlite3_context* ctx) {
  auto** slot = static_cast<ExactSum**>(sqlite3_aggregate_context(ctx, 0));
  if (!slot || !*slot) {
    sqlite3_result_double(ctx, 0.0);
    return;
  }
  sqlite3_result_double(ctx, (*slot)->value());
  delete *slot;
}

}  // namespace

Store::Store(const std::filesystem::path& path) {
  const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
  if (sqlite3_open_v2(path.string().c_str(), &db_, flags, nullptr) != SQLITE_OK) {
    const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw IoError(path.string(), "cannot open database (" + msg + ")");
  }
  sqlite3_busy_timeout(db_, 5000);
  // Order-independent real sums keep per-customer and full-table aggregates identical.
  sqlite3_create_function(db_, "exact_sum", 1, SQLITE_UTF8 | SQLITE_DETERMINISTIC, nullptr,
                          nullptr, exact_sum_step, exact_sum_final);
  exec("PRAGMA foreign_keys = ON");
  for (const auto& stmt : schema_ddl()) exec(stmt);
}

Store::~Store() { sqlite3_close(db_); }

void Store::exec(const std::string& sql) const {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw IoError("sqlite", "statement failed: " + msg);
  }
}

namespace {

// Rolls back unless committed.
class Transaction {
 public:
  explicit Transaction(sqlite3* db) : db_(db) {
    sqlite3_exec(db_, "BEGIN IMMEDIATE", nullptr, nullptr, nullptr);
  }
  ~Transaction() {
    if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
  void commit() {
    if (sqlite3_exec(db_, "COMMIT", nullptr, nullptr, nullptr) != SQLITE_OK) {
      throw IoError("sqlite", std::string("commit failed: ") + sqlite3_errmsg(db_));
    }
    done_ = true;
  }

 private:
  sqlite3* db_;
  bool done_ = false;
};

}  // namespace

void Store::ingest(const SyntheticDataset& ds) {
  std::lock_guard lock(mu_);
  Transaction tx(db_);
  {
    Stmt ins(db_, "INSERT INTO kyc VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)");
    for (const auto& r : ds.kyc) {
      try {
        ins.bind(1, r.name).bind(2, r.gender).bind(3, r.occupation).bind(4, r.age);
        ins.bind(5, r.tenur).bind(6, r.cust_id).bind(7, r.label).run();
      } catch (const IntegrityError&) {
        throw IntegrityError("duplicate or invalid kyc row for cust_id '" + r.cust_id + "'");
      }
    }
  }
  {
    Stmt ins(db_, "INSERT INTO cash_trxns VALUES (?1, ?2, ?3, ?4)");
    for (const auto& r : ds.cash) {
      ins.bind(1, r.cust_id).bind(2, r.amount).bind(3, r.type).bind(4, r.txn_id).run();
    }
  }
  {
    Stmt ins(db_, "INSERT INTO emt_trxns VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)");
    for (const auto& r : ds.emt) {
      ins.bind(1, r.id_sender).bind(2, r.id_receiver).bind(3, r.name_sender);
      ins.bind(4, r.name_receiver).bind(5, r.message).bind(6, r.value).bind(7, r.txn_id).run();
    }
  }
  {
    Stmt ins(db_, "INSERT INTO wire_trxns VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)");
    for (const auto& r : ds.wire) {
      ins.bind(1, r.id_sender).bind(2, r.id_receiver).bind(3, r.name_sender);
      ins.bind(4, r.name_receiver).bind(5, r.value).bind(6, r.country_sender);
      ins.bind(7, r.country_receiver).bind(8, r.txn_id).run();
    }
  }
  tx.commit();
  ++generation_;
}

void Store::ingest_csv(const std::filesystem::path& dir) { ingest(datagen::read_csv(dir)); }

SyntheticDataset Store::dataset() const {
  std::lock_guard lock(mu_);
  SyntheticDataset ds;
  {
    Stmt q(db_, "SELECT name, gender, occupation, age, tenur, cust_id, label FROM kyc ORDER BY cust_id");
    while (q.step()) {
      ds.kyc.push_back({q.text(0), q.text(1), q.text(2), static_cast<int>(q.i64(3)),
                        static_cast<int>(q.i64(4)), q.text(5), static_cast<int>(q.i64(6))});
    }
  }
  {
    Stmt q(db_, "SELECT cust_id, amount, type, txn_id FROM cash_trxns ORDER BY txn_id");
    while (q.step()) ds.cash.push_back({q.text(0), q.i64(1), q.text(2), q.text(3)});
  }
  {
    Stmt q(db_, "SELECT * FROM emt_trxns ORDER BY txn_id");
    while (q.step()) {
      ds.emt.push_back({q.text(0), q.text(1), q.text(2), q.text(3), q.text(4), q.real(5), q.text(6)});
    }
  }
  {
    Stmt q(db_, "SELECT * FROM wire_trxns ORDER BY txn_id");
    while (q.step()) {
      ds.wire.push_back({q.text(0), q.text(1), q.text(2), q.text(3), q.real(4), q.text(5),
                         q.text(6), q.text(7)});
    }
  }
  return ds;
}

std::vector<KycRow> Store::kyc() const {
  std::lock_guard lock(mu_);
  std::vector<KycRow> out;
  Stmt q(db_, "SELECT name, gender, occupation, age, tenur, cust_id, label FROM kyc ORDER BY cust_id");
  while (q.step()) {
    out.push_back({q.text(0), q.text(1), q.text(2), static_cast<int>(q.i64(3)),
                   static_cast<int>(q.i64(4)), q.text(5), static_cast<int>(q.i64(6))});
  }
  return out;
}

std::optional<KycRow> Store::customer(const std::string& cust_id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT name, gender, occupation, age, tenur, cust_id, label FROM kyc WHERE cust_id = ?1");
  q.bind(1, cust_id);
  if (!q.step()) return std::nullopt;
  return KycRow{q.text(0), q.text(1), q.text(2), static_cast<int>(q.i64(3)),
                static_cast<int>(q.i64(4)), q.text(5), static_cast<int>(q.i64(6))};
}

bool Store::has_customer(const std::string& cust_id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT 1 FROM kyc WHERE cust_id = ?1");
  q.bind(1, cust_id);
  return q.step();
}

std::size_t Store::row_count(const std::string& table) const {
  key_of(table);
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT COUNT(*) FROM " + quote_ident(table));
  q.step();
  return static_cast<std::size_t>(q.i64(0));
}

std::string Store::table_checksum(const std::string& table) const {
  const char* key = key_of(table);
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT * FROM " + quote_ident(table) + " ORDER BY " + key);
  std::uint64_t h = fnv1a("");
  while (q.step()) {
    for (int c = 0; c < q.columns(); ++c) {
      if (q.type(c) == SQLITE_FLOAT) {
        const double v = q.real(c);
        h = fnv1a(std::string_view(reinterpret_cast<const char*>(&v), sizeof v), h);
      } else {
        h = fnv1a(q.text(c), h);
      }
      h = fnv1a("\x1f", h);
    }
    h = fnv1a("\x1e", h);
  }
  return hex64(h);
}

std::string Store::data_fingerprint() const {
  std::lock_guard lock(mu_);
  std::string all;
  for (const char* t : {"kyc", "cash_trxns", "emt_trxns", "wire_trxns", "label_events"}) {
    all += table_checksum(t);
  }
  return hex64(fnv1a(all));
}

std::vector<std::string> Store::top_countries(std::size_t cap) const {
  std::lock_guard lock(mu_);
  Stmt q(db_,
         "SELECT c, COUNT(*) AS n FROM (SELECT \"country sender\" AS c FROM wire_trxns UNION ALL "
         "SELECT \"country receiver\" FROM wire_trxns) WHERE c <> ?1 GROUP BY c ORDER BY n DESC, "
         "c ASC LIMIT ?2");
  q.bind(1, std::string(kNanCountry)).bind(2, static_cast<std::int64_t>(cap));
  std::vector<std::string> out;
  while (q.step()) out.push_back(q.text(0));
  return out;
}

namespace {

// One set-based query producing every feature column for every kyc row, in
// feature_names order. `filter` restricts all aggregates to a single customer.
std::string feature_sql(const FeatureSpec& spec, bool filter) {
  const std::string ws = filter ? " WHERE \"id sender\" = ?1" : "";
  const std::string wr = filter ? " WHERE \"id receiver\" = ?1" : "";
  const std::string cw = filter ? " AND cust_id = ?1" : "";
  const bool v3 = spec.version == FeatureVersion::V3;

  auto country_columns = [&](const char* country_col) {
    std::string s;
    if (!v3) return s;
    std::string in_list;
    for (std::size_t i = 0; i < spec.countries.size(); ++i) {
      if (i) in_list += ", ";
      in_list += quote_literal(spec.countries[i]);
      s += ", SUM(CASE WHEN " + std::string(country_col) + " = " +
           quote_literal(spec.countries[i]) + " THEN 1 ELSE 0 END) AS c" + std::to_string(i);
    }
    s += ", SUM(CASE WHEN " + std::string(country_col) + " NOT IN (" + in_list +
         ") THEN 1 ELSE 0 END) AS cnan";
    return s;
  };

  std::string sql = "WITH ";
  sql += "ws AS (SELECT \"id sender\" AS cid, COUNT(*) AS cnt, exact_sum(\"wire value\") AS amt, "
         "SUM(\"country sender\" <> \"country receiver\") AS intl" +
         country_columns("\"country receiver\"") + " FROM wire_trxns" + ws + " GROUP BY cid), ";
  sql += "wr AS (SELECT \"id receiver\" AS cid, COUNT(*) AS cnt, exact_sum(\"wire value\") AS amt, "
         "SUM(\"country sender\" <> \"country receiver\") AS intl" +
         country_columns("\"country sender\"") + " FROM wire_trxns" + wr + " GROUP BY cid), ";
  sql += "es AS (SELECT \"id sender\" AS cid, COUNT(*) AS cnt, exact_sum(\"emt value\") AS amt FROM "
         "emt_trxns" + ws + " GROUP BY cid), ";
  sql += "er AS (SELECT \"id receiver\" AS cid, COUNT(*) AS cnt, exact_sum(\"emt value\") AS amt FROM "
         "emt_trxns" + wr + " GROUP BY cid), ";
  sql += "cd AS (SELECT cust_id AS cid, COUNT(*) AS cnt, SUM(amount) AS amt FROM cash_trxns "
         "WHERE type = 'deposit'" + cw + " GROUP BY cid), ";
  sql += "cw AS (SELECT cust_id AS cid, COUNT(*) AS cnt, SUM(amount) AS amt FROM cash_trxns "
         "WHERE type = 'withdrawal'" + cw + " GROUP BY cid), ";
  sql += "base AS (SELECT k.cust_id AS cust_id, "
         "COALESCE(ws.cnt, 0) AS wire_sent_cnt, COALESCE(ws.amt, 0.0) AS wire_sent_amt, "
         "COALESCE(wr.cnt, 0) AS wire_recv_cnt, COALESCE(wr.amt, 0.0) AS wire_recv_amt, "
         "COALESCE(ws.intl, 0) AS wire_sent_intl_cnt, COALESCE(wr.intl, 0) AS wire_recv_intl_cnt, "
         "COALESCE(es.cnt, 0) AS emt_sent_cnt, COALESCE(es.amt, 0.0) AS emt_sent_amt, "
         "COALESCE(er.cnt, 0) AS emt_recv_cnt, COALESCE(er.amt, 0.0) AS emt_recv_amt, "
         "COALESCE(cd.cnt, 0) AS cash_dep_cnt, COALESCE(cd.amt, 0) AS cash_dep_amt, "
         "COALESCE(cw.cnt, 0) AS cash_wd_cnt, COALESCE(cw.amt, 0) AS cash_wd_amt";
  if (v3) {
    for (const char* side : {"ws", "wr"}) {
      for (std::size_t i = 0; i < spec.countries.size(); ++i) {
        sql += ", COALESCE(" + std::string(side) + ".c" + std::to_string(i) + ", 0) AS " + side +
               "_c" + std::to_string(i);
      }
      sql += ", COALESCE(" + std::string(side) + ".cnan, 0) AS " + side + "_cnan";
    }
  }
  sql += " FROM kyc k LEFT JOIN ws ON ws.cid = k.cust_id LEFT JOIN wr ON wr.cid = k.cust_id "
         "LEFT JOIN es ON es.cid = k.cust_id LEFT JOIN er ON er.cid = k.cust_id "
         "LEFT JOIN cd ON cd.cid = k.cust_id LEFT JOIN cw ON cw.cid = k.cust_id";
  if (filter) sql += " WHERE k.cust_id = ?1";
  sql += ") SELECT cust_id";
  for (const auto& n : kV1Names) sql += ", " + n;
  if (spec.version != FeatureVersion::V1) {
    sql += ", wire_sent_cnt + wire_recv_cnt, wire_sent_amt + wire_recv_amt, "
           "emt_sent_cnt + emt_recv_cnt, emt_sent_amt + emt_recv_amt, "
           "cash_dep_cnt + cash_wd_cnt, cash_dep_amt + cash_wd_amt, "
           "wire_sent_intl_cnt + wire_recv_intl_cnt, wire_recv_amt - wire_sent_amt, "
           "emt_recv_amt - emt_sent_amt, cash_dep_amt - cash_wd_amt";
  }
  if (v3) {
    for (const char* side : {"ws", "wr"}) {
      for (std::size_t i = 0; i < spec.countries.size(); ++i) {
        sql += ", " + std::string(side) + "_c" + std::to_string(i);
      }
      sql += ", " + std::string(side) + "_cnan";
    }
  }
  sql += " FROM base ORDER BY cust_id";
  return sql;
}

}  // namespace

FeatureTable Store::build_features_locked(const FeatureSpec& spec,
                                          const std::optional<std::string>& cust_id) const {
  FeatureTable t;
  t.names = feature_names(spec);
  const std::size_t d = t.names.size();
  Stmt q(db_, feature_sql(spec, cust_id.has_value()));
  if (cust_id) q.bind(1, *cust_id);
  std::vector<double> data;
  while (q.step()) {
    t.cust_ids.push_back(q.text(0));
    for (std::size_t j = 0; j < d; ++j) data.push_back(q.real(static_cast<int>(j + 1)));
  }
  if (cust_id && t.cust_ids.empty()) throw NotFoundError("unknown customer '" + *cust_id + "'");
  t.values = Matrix(t.cust_ids.size(), d, std::move(data));
  return t;
}

FeatureTable Store::build_features(const FeatureSpec& spec,
                                   const std::optional<std::string>& cust_id) const {
  spec.validate();
  std::lock_guard lock(mu_);
  return build_features_locked(spec, cust_id);
}

void Store::materialize_features(const FeatureSpec& spec) {
  spec.validate();
  std::lock_guard lock(mu_);
  const FeatureTable t = build_features_locked(spec, std::nullopt);
  const std::string table = quote_ident(feature_table_name(spec.version));
  Transaction tx(db_);
  exec("DROP TABLE IF EXISTS " + table);
  std::string ddl = "CREATE TABLE " + table + " (cust_id TEXT PRIMARY KEY REFERENCES kyc (cust_id)";
  std::string ins = "INSERT INTO " + table + " VALUES (?1";
  for (std::size_t j = 0; j < t.names.size(); ++j) {
    ddl += ", " + quote_ident(t.names[j]) + " REAL NOT NULL";
    ins += ", ?" + std::to_string(j + 2);
  }
  exec(ddl + ")");
  Stmt st(db_, ins + ")");
  for (std::size_t r = 0; r < t.cust_ids.size(); ++r) {
    st.bind(1, t.cust_ids[r]);
    for (std::size_t j = 0; j < t.names.size(); ++j) {
      st.bind(static_cast<int>(j + 2), t.values(r, j));
    }
    st.run();
  }
  tx.commit();
  ++generation_;
}

FeatureTable Store::read_features(FeatureVersion version) const {
  std::lock_guard lock(mu_);
  const std::string table = feature_table_name(version);
  Stmt exists(db_, "SELECT 1 FROM sqlite_master WHERE type = 'table' AND name = ?1");
  exists.bind(1, table);
  if (!exists.step()) throw NotFoundError("feature table " + table + " has not been materialized");
  Stmt q(db_, "SELECT * FROM " + quote_ident(table) + " ORDER BY cust_id");
  FeatureTable t;
  {
    Stmt info(db_, "SELECT name FROM pragma_table_info(?1) ORDER BY cid");
    info.bind(1, table);
    while (info.step()) t.names.push_back(info.text(0));
    t.names.erase(t.names.begin());
  }
  std::vector<double> data;
  while (q.step()) {
    t.cust_ids.push_back(q.text(0));
    for (std::size_t j = 0; j < t.names.size(); ++j) data.push_back(q.real(static_cast<int>(j + 1)));
  }
  t.values = Matrix(t.cust_ids.size(), t.names.size(), std::move(data));
  return t;
}

std::int64_t Store::record_label(const std::string& cust_id, int label, const std::string& source) {
  if (label != 0 && label != 1) throw ValidationError("label must be 0 or 1");
  std::lock_guard lock(mu_);
  if (!has_customer(cust_id)) throw NotFoundError("unknown customer '" + cust_id + "'");
  Stmt ins(db_, "INSERT INTO label_events (cust_id, new_label, source, timestamp) VALUES (?1, ?2, ?3, ?4)");
  ins.bind(1, cust_id).bind(2, label).bind(3, source).bind(4, utc_now_iso()).run();
  return sqlite3_last_insert_rowid(db_);
}

std::vector<LabelEvent> Store::label_events(std::int64_t after_event_id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT event_id, cust_id, new_label, source, timestamp FROM label_events WHERE "
              "event_id > ?1 ORDER BY event_id");
  q.bind(1, after_event_id);
  std::vector<LabelEvent> out;
  while (q.step()) {
    out.push_back({q.i64(0), q.text(1), static_cast<int>(q.i64(2)), q.text(3), q.text(4)});
  }
  return out;
}

std::vector<LabelEvent> Store::label_history(const std::string& cust_id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT event_id, cust_id, new_label, source, timestamp FROM label_events WHERE "
              "cust_id = ?1 ORDER BY event_id");
  q.bind(1, cust_id);
  std::vector<LabelEvent> out;
  while (q.step()) {
    out.push_back({q.i64(0), q.text(1), static_cast<int>(q.i64(2)), q.text(3), q.text(4)});
  }
  return out;
}

std::int64_t Store::last_event_id() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT COALESCE(MAX(event_id), 0) FROM label_events");
  q.step();
  return q.i64(0);
}

std::size_t Store::events_since(std::int64_t event_id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT COUNT(*) FROM label_events WHERE event_id > ?1");
  q.bind(1, event_id);
  q.step();
  return static_cast<std::size_t>(q.i64(0));
}

std::map<std::string, int> Store::effective_labels() const {
  std::lock_guard lock(mu_);
  Stmt q(db_,
         "SELECT k.cust_id, COALESCE((SELECT e.new_label FROM label_events e WHERE e.cust_id = "
         "k.cust_id ORDER BY e.event_id DESC LIMIT 1), k.label) FROM kyc k");
  std::map<std::string, int> out;
  while (q.step()) out.emplace(q.text(0), static_cast<int>(q.i64(1)));
  return out;
}

std::vector<int> Store::effective_labels(const std::vector<std::string>& cust_ids) const {
  const auto all = effective_labels();
  std::vector<int> out;
  out.reserve(cust_ids.size());
  for (const auto& id : cust_ids) {
    auto it = all.find(id);
    if (it == all.end()) throw NotFoundError("unknown customer '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

DatasetProfile Store::profile(std::size_t top_k) const {
  const auto rows = kyc();
  if (rows.empty()) throw ValidationError("cannot profile an empty kyc table");
  DatasetProfile p;
  p.n_customers = rows.size();
  p.age = Histogram{18.0, 5.0, std::vector<std::size_t>(15), std::vector<std::size_t>(15)};
  p.tenur = Histogram{0.0, 5.0, std::vector<std::size_t>(10), std::vector<std::size_t>(10)};

  std::map<std::string, std::size_t> name_count;
  for (const auto& r : rows) ++name_count[r.name];
  std::map<std::string, GenderCount> gender;
  std::map<std::string, OccupationRisk> occ;
  auto put = [](Histogram& h, double v, int label) {
    auto bins = static_cast<long>(h.label0.size());
    long b = static_cast<long>(std::floor((v - h.lo) / h.width));
    b = std::clamp(b, 0L, bins - 1);
    (label ? h.label1 : h.label0)[static_cast<std::size_t>(b)]++;
  };
  for (const auto& r : rows) {
    (r.label ? p.classes.label1 : p.classes.label0)++;
    if (name_count[r.name] > 1) (r.label ? p.repeated_name_classes.label1 : p.repeated_name_classes.label0)++;
    auto& g = gender[r.gender];
    g.gender = r.gender;
    (r.label ? g.label1 : g.label0)++;
    auto& o = occ[r.occupation];
    o.occupation = r.occupation;
    o.total++;
    o.risky += static_cast<std::size_t>(r.label);
    put(p.age, r.age, r.label);
    put(p.tenur, r.tenur, r.label);
  }
  auto fraction = [](ClassSizes& c) {
    const double n = static_cast<double>(c.label0 + c.label1);
    c.majority_fraction = n > 0 ? static_cast<double>(std::max(c.label0, c.label1)) / n : 0.0;
  };
  fraction(p.classes);
  fraction(p.repeated_name_classes);
  for (auto& [_, g] : gender) p.gender.push_back(g);
  for (auto& [_, o] : occ) {
    o.risky_fraction = static_cast<double>(o.risky) / static_cast<double>(o.total);
    p.top_occupations.push_back(o);
  }
  std::stable_sort(p.top_occupations.begin(), p.top_occupations.end(),
                   [](const OccupationRisk& a, const OccupationRisk& b) {
                     if (a.risky_fraction != b.risky_fraction) return a.risky_fraction > b.risky_fraction;
                     if (a.total != b.total) return a.total > b.total;
                     return a.occupation < b.occupation;
                   });
  if (p.top_occupations.size() > top_k) p.top_occupations.resize(top_k);
  return p;
}

std::int64_t Store::register_model(const ModelRecord& meta,
                                   const std::function<std::string(std::int64_t)>& render) {
  std::lock_guard lock(mu_);
  Transaction tx(db_);
  Stmt ins(db_, "INSERT INTO model_registry (created_at, created_unix, feature_version, "
                "fingerprint, metrics, label_watermark, artifact) VALUES (?1, ?2, ?3, ?4, ?5, ?6, '')");
  ins.bind(1, meta.created_at).bind(2, meta.created_unix).bind(3, meta.feature_version);
  ins.bind(4, meta.fingerprint).bind(5, meta.metrics).bind(6, meta.label_watermark).run();
  const std::int64_t id = sqlite3_last_insert_rowid(db_);
  Stmt upd(db_, "UPDATE model_registry SET artifact = ?1 WHERE version_id = ?2");
  upd.bind(1, render(id)).bind(2, id).run();
  tx.commit();
  return id;
}

namespace {

ModelRecord record_from(Stmt& q, bool with_artifact) {
  ModelRecord r;
  r.version_id = q.i64(0);
  r.created_at = q.text(1);
  r.created_unix = q.real(2);
  r.feature_version = q.text(3);
  r.fingerprint = q.text(4);
  r.metrics = q.text(5);
  r.label_watermark = q.i64(6);
  if (with_artifact) r.artifact = q.text(7);
  return r;
}

constexpr const char* kRegistryCols =
    "SELECT version_id, created_at, created_unix, feature_version, fingerprint, metrics, "
    "label_watermark, artifact FROM model_registry ";

}  // namespace

std::optional<ModelRecord> Store::model(std::int64_t version_id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, std::string(kRegistryCols) + "WHERE version_id = ?1");
  q.bind(1, version_id);
  if (!q.step()) return std::nullopt;
  return record_from(q, true);
}

std::optional<ModelRecord> Store::latest_model() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, std::string(kRegistryCols) + "ORDER BY version_id DESC LIMIT 1");
  if (!q.step()) return std::nullopt;
  return record_from(q, true);
}

std::vector<ModelRecord> Store::models() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, std::string(kRegistryCols) + "ORDER BY version_id");
  std::vector<ModelRecord> out;
  while (q.step()) out.push_back(record_from(q, false));
  return out;
}

FeatureTable features_oracle(const SyntheticDataset& ds, const FeatureSpec& spec) {
  FeatureTable t;
  t.names = feature_names(spec);
  const std::size_t d = t.names.size();
  std::vector<KycRow> kyc = ds.kyc;
  std::sort(kyc.begin(), kyc.end(),
            [](const KycRow& a, const KycRow& b) { return a.cust_id < b.cust_id; });
  t.values = Matrix(kyc.size(), d, 0.0);
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < kyc.size(); ++i) {
    t.cust_ids.push_back(kyc[i].cust_id);
    row_of.emplace(kyc[i].cust_id, i);
  }
  const bool v3 = spec.version == FeatureVersion::V3;
  const std::size_t nc = spec.countries.size();
  auto country_slot = [&](const std::string& c) {
    for (std::size_t i = 0; i < nc; ++i) {
      if (spec.countries[i] == c) return i;
    }
    return nc;
  };
  const std::size_t v3_base = 24;
  std::vector<ExactSum> amounts(kyc.size() * 4);

  for (const auto& w : ds.wire) {
    const bool intl = w.country_sender != w.country_receiver;
    if (auto it = row_of.find(w.id_sender); it != row_of.end()) {
      auto r = it->second;
      t.values(r, 0) += 1;
      amounts[r * 4 + 0].add(w.value);
      if (intl) t.values(r, 4) += 1;
      if (v3) t.values(r, v3_base + country_slot(w.country_receiver)) += 1;
    }
    if (auto it = row_of.find(w.id_receiver); it != row_of.end()) {
      auto r = it->second;
      t.values(r, 2) += 1;
      amounts[r * 4 + 1].add(w.value);
      if (intl) t.values(r, 5) += 1;
      if (v3) t.values(r, v3_base + nc + 1 + country_slot(w.country_sender)) += 1;
    }
  }
  for (const auto& e : ds.emt) {
    if (auto it = row_of.find(e.id_sender); it != row_of.end()) {
      t.values(it->second, 6) += 1;
      amounts[it->second * 4 + 2].add(e.value);
    }
    if (auto it = row_of.find(e.id_receiver); it != row_of.end()) {
      t.values(it->second, 8) += 1;
      amounts[it->second * 4 + 3].add(e.value);
    }
  }
  for (const auto& c : ds.cash) {
    auto it = row_of.find(c.cust_id);
    if (it == row_of.end()) continue;
    const std::size_t off = c.type == "deposit" ? 10 : (c.type == "withdrawal" ? 12 : d);
    if (off == d) continue;
    t.values(it->second, off) += 1;
    t.values(it->second, off + 1) += static_cast<double>(c.amount);
  }
  for (std::size_t r = 0; r < kyc.size(); ++r) {
    t.values(r, 1) = amounts[r * 4 + 0].value();
    t.values(r, 3) = amounts[r * 4 + 1].value();
    t.values(r, 7) = amounts[r * 4 + 2].value();
    t.values(r, 9) = amounts[r * 4 + 3].value();
  }
  if (spec.version != FeatureVersion::V1) {
    for (std::size_t r = 0; r < kyc.size(); ++r) {
      auto v = t.values.row(r);
      v[14] = v[0] + v[2];
      v[15] = v[1] + v[3];
      v[16] = v[6] + v[8];
      v[17] = v[7] + v[9];
      v[18] = v[10] + v[12];
      v[19] = v[11] + v[13];
      v[20] = v[4] + v[5];
      v[21] = v[3] - v[1];
      v[22] = v[9] - v[7];
      v[23] = v[11] - v[13];
    }
  }
  return t;
}

}  // namespace amlrisk::store
