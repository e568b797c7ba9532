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

#include "amlrisk/server.hpp"

#include <algorithm>
#include <charconv>

#include "httplib.h"

#include "amlrisk/csv.hpp"
#include "amlrisk/serialize.hpp"

namespace amlrisk::service {

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}, {"status", status}});
}

long long int_param(const httplib::Request& req, const std::string& name, long long fallback,
                    long long lo, long long hi) {
  if (!req.has_param(name)) return fallback;
  const std::string text = req.get_param_value(name);
  long long v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || v < lo || v > hi) {
    throw ValidationError("query parameter '" + name + "' must be an integer in [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return v;
}

std::optional<double> double_param(const httplib::Request& req, const std::string& name) {
  if (!req.has_param(name)) return std::nullopt;
  const std::string text = req.get_param_value(name);
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("query parameter '" + name + "' must be a number");
}

json customer_json(const ScoredCustomer& c, std::int64_t version) {
  return {{"cust_id", c.cust_id}, {"score", c.score},   {"age", c.age},
          {"tenur", c.tenur},     {"occupation", c.occupation}, {"gender", c.gender},
          {"label", c.effective_label}, {"model_version", version}};
}

json event_json(const store::LabelEvent& e) {
  return {{"event_id", e.event_id},
          {"cust_id", e.cust_id},
          {"label", e.new_label},
          {"source", e.source},
          {"timestamp", e.timestamp}};
}

json cml_json(const CmlResult& r) {
  return {{"retrained", r.retrained},
          {"reason", r.reason},
          {"error", r.error},
          {"model_version", r.artifact ? json(r.artifact->version_id) : json()}};
}

std::shared_ptr<const ModelArtifact> require_model(const ModelService& s) {
  auto a = s.active();
  if (!a) throw NotFoundError("no model has been trained yet");
  return a;
}

}  // namespace

HttpServer::HttpServer(ModelService& service, ServerOptions options)
    : service_(service), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::routes() {
  auto& srv = *server_;

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    } catch (const ValidationError& e) {
      send_error(res, 400, e.what());
    } catch (const ParameterError& e) {
      send_error(res, 400, e.what());
    } catch (const ConfigError& e) {
      send_error(res, 400, e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, std::string("invalid JSON: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    } catch (...) {
      send_error(res, 500, "unknown error");
    }
  });

  srv.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    if (options_.token.empty() || req.path == "/health") return httplib::Server::HandlerResponse::Unhandled;
    if (req.get_header_value("Authorization") != "Bearer " + options_.token) {
      send_error(res, 401, "missing or invalid bearer token");
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  srv.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    const auto a = service_.active();
    send_json(res, 200,
              {{"status", "ok"},
               {"model_version", a ? json(a->version_id) : json()},
               {"retraining", service_.retraining()}});
  });

  srv.Get("/model", [this](const httplib::Request&, httplib::Response& res) {
    const auto a = require_model(service_);
    send_json(res, 200,
              {{"model_version", a->version_id},
               {"created_at", a->created_at},
               {"learner", trees::to_string(a->model.kind)},
               {"features", serialize::features_to_json(a->features)},
               {"encoding", encode::to_string(a->encoder.mode)},
               {"hyperparameters", a->hyperparameters},
               {"metrics", serialize::report_to_json(a->holdout)},
               {"data_fingerprint", a->data_fingerprint},
               {"label_watermark", a->label_watermark},
               {"changes_since_train", service_.store().events_since(a->label_watermark)},
               {"retraining", service_.retraining()},
               {"policy", service_.policy().to_json()},
               {"last_result", cml_json(service_.last_result())},
               {"shap_variant", a->shap_variant}});
  });

  srv.Get("/customers", [this](const httplib::Request& req, httplib::Response& res) {
    const auto a = require_model(service_);
    const std::string sort = req.has_param("sort") ? req.get_param_value("sort") : "risk";
    if (sort != "risk" && sort != "cust_id" && sort != "age" && sort != "tenur") {
      throw ValidationError("sort must be one of risk, cust_id, age, tenur");
    }
    std::string order = req.has_param("order") ? req.get_param_value("order") : "";
    if (order.empty()) order = sort == "risk" ? "desc" : "asc";
    if (order != "asc" && order != "desc") throw ValidationError("order must be asc or desc");
    const auto limit = static_cast<std::size_t>(int_param(req, "limit", 50, 1, 10000));
    const auto offset = static_cast<std::size_t>(int_param(req, "offset", 0, 0, 1LL << 40));
    const auto min_score = double_param(req, "min_score");

    const auto batch = service_.batch_scores(a);
    std::vector<const ScoredCustomer*> rows;
    rows.reserve(batch->rows.size());
    for (const auto& c : batch->rows) {
      if (!min_score || c.score >= *min_score) rows.push_back(&c);
    }
    const bool desc = order == "desc";
    auto key_less = [&](const ScoredCustomer* x, const ScoredCustomer* y) {
      if (sort == "risk" && x->score != y->score) return desc ? x->score > y->score : x->score < y->score;
      if (sort == "age" && x->age != y->age) return desc ? x->age > y->age : x->age < y->age;
      if (sort == "tenur" && x->tenur != y->tenur) return desc ? x->tenur > y->tenur : x->tenur < y->tenur;
      if (sort == "cust_id") return desc ? x->cust_id > y->cust_id : x->cust_id < y->cust_id;
      return x->cust_id < y->cust_id;
    };
    std::stable_sort(rows.begin(), rows.end(), key_less);
    json items = json::array();
    for (std::size_t i = offset; i < rows.size() && items.size() < limit; ++i) {
      items.push_back(customer_json(*rows[i], batch->model_version));
    }
    send_json(res, 200,
              {{"model_version", batch->model_version},
               {"total", rows.size()},
               {"offset", offset},
               {"limit", limit},
               {"sort", sort},
               {"order", order},
               {"customers", std::move(items)}});
  });

  srv.Get(R"(/customers/([^/]+)/score)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto a = require_model(service_);
    const std::string id = req.matches[1];
    const auto k = static_cast<std::size_t>(int_param(req, "top_k", 5, 0, 1000));
    json body = score_customer(service_.store(), *a, id, k).to_json();
    json history = json::array();
    for (const auto& e : service_.store().label_history(id)) history.push_back(event_json(e));
    body["label_history"] = std::move(history);
    send_json(res, 200, body);
  });

  srv.Post(R"(/customers/([^/]+)/label)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const json body = json::parse(req.body);
    if (!body.is_object() || !body.contains("label") || !body["label"].is_number_integer()) {
      throw ValidationError("body must be {\"label\": 0|1, \"source\": \"...\"}");
    }
    const std::string source = body.value("source", std::string("api"));
    const auto event_id = record_label(service_.store(), id, body["label"].get<int>(), source);
    const auto a = service_.active();
    send_json(res, 201,
              {{"event_id", event_id},
               {"cust_id", id},
               {"label", body["label"]},
               {"changes_since_train", service_.changes_since_train()},
               {"model_version", a ? json(a->version_id) : json()}});
  });

  srv.Post("/retrain", [this](const httplib::Request&, httplib::Response& res) {
    if (!service_.retrain_async(true)) {
      send_error(res, 409, "a retrain is already running");
      return;
    }
    const auto a = service_.active();
    send_json(res, 202, {{"status", "started"}, {"model_version", a ? json(a->version_id) : json()}});
  });

  srv.Get("/reports", [this](const httplib::Request&, httplib::Response& res) {
    json entries = json::array();
    const auto path = options_.reports_dir / "leaderboard.csv";
    if (!options_.reports_dir.empty() && std::filesystem::exists(path)) {
      const auto t = csv::read(path);
      for (const auto& row : t.rows) {
        json e = json::object();
        for (std::size_t c = 0; c < t.header.size() && c < row.size(); ++c) e[t.header[c]] = row[c];
        entries.push_back(std::move(e));
      }
    }
    send_json(res, 200, {{"entries", std::move(entries)}});
  });
}

void HttpServer::bind() {
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
  } else {
    port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (port_ <= 0) {
    throw IoError(options_.host + ":" + std::to_string(options_.port), "cannot bind address");
  }
}

int HttpServer::start() {
  bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpServer::run() {
  bind();
  server_->listen_after_bind();
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace amlrisk::service
