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

#include "amlrisk/serialize.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace amlrisk::serialize {

namespace {

using trees::DtParams;
using trees::GbdtParams;
using trees::RfParams;

// Reads optional field `name` into `out`, recording it as consumed.
template <typename T>
void read(const json& j, const char* name, T& out, std::set<std::string>& used) {
  used.insert(name);
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return;
  try {
    if constexpr (std::is_same_v<T, trees::MaxFeatures>) {
      out = trees::max_features_from_string(it->get<std::string>());
    } else if constexpr (std::is_same_v<T, int>) {
      // max_depth accepts null/"None" as unlimited.
      if (it->is_string()) {
        const auto s = it->get<std::string>();
        if (s == "None" || s == "none" || s == "unlimited") {
          out = trees::kUnlimitedDepth;
          return;
        }
        throw ConfigError(name, "expected an integer");
      }
      out = it->get<int>();
    } else {
      out = it->get<T>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(name, e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& used) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "kind" && !used.count(it.key())) throw ConfigError(it.key(), "unknown parameter");
  }
}

void fill(const json& j, DtParams& p, std::set<std::string>& used) {
  read(j, "max_depth", p.max_depth, used);
  read(j, "min_samples_split", p.min_samples_split, used);
  read(j, "balanced_class_weight", p.balanced_class_weight, used);
  read(j, "seed", p.seed, used);
}

void fill(const json& j, RfParams& p, std::set<std::string>& used) {
  read(j, "n_estimators", p.n_estimators, used);
  read(j, "max_features", p.max_features, used);
  read(j, "max_depth", p.max_depth, used);
  read(j, "min_samples_split", p.min_samples_split, used);
  read(j, "balanced_class_weight", p.balanced_class_weight, used);
  read(j, "seed", p.seed, used);
}

void fill(const json& j, GbdtParams& p, std::set<std::string>& used) {
  read(j, "n_estimators", p.n_estimators, used);
  read(j, "learning_rate", p.learning_rate, used);
  read(j, "max_depth", p.max_depth, used);
  read(j, "num_leaves", p.num_leaves, used);
  read(j, "reg_lambda", p.reg_lambda, used);
  read(j, "max_bin", p.max_bin, used);
  read(j, "is_unbalance", p.is_unbalance, used);
  read(j, "min_data_in_leaf", p.min_data_in_leaf, used);
  read(j, "min_child_weight", p.min_child_weight, used);
  read(j, "seed", p.seed, used);
}

std::string kind_name(trees::ModelKind k) {
  switch (k) {
    case trees::ModelKind::DT: return "dt";
    case trees::ModelKind::RF: return "rf";
    case trees::ModelKind::GBDT: return "gbdt";
  }
  return "dt";
}

}  // namespace

json params_to_json(const trees::LearnerParams& p) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        json j;
        if constexpr (std::is_same_v<T, DtParams>) {
          j = {{"kind", "dt"},
               {"max_depth", v.max_depth},
               {"min_samples_split", v.min_samples_split},
               {"balanced_class_weight", v.balanced_class_weight},
               {"seed", v.seed}};
        } else if constexpr (std::is_same_v<T, RfParams>) {
          j = {{"kind", "rf"},
               {"n_estimators", v.n_estimators},
               {"max_features", trees::to_string(v.max_features)},
               {"max_depth", v.max_depth},
               {"min_samples_split", v.min_samples_split},
               {"balanced_class_weight", v.balanced_class_weight},
               {"seed", v.seed}};
        } else {
          j = {{"kind", "gbdt"},
               {"n_estimators", v.n_estimators},
               {"learning_rate", v.learning_rate},
               {"max_depth", v.max_depth},
               {"num_leaves", v.num_leaves},
               {"reg_lambda", v.reg_lambda},
               {"max_bin", v.max_bin},
               {"is_unbalance", v.is_unbalance},
               {"min_data_in_leaf", v.min_data_in_leaf},
               {"min_child_weight", v.min_child_weight},
               {"seed", v.seed}};
        }
        return j;
      },
      p);
}

trees::LearnerParams params_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("learner", "expected an object");
  const std::string kind = j.value("kind", std::string("dt"));
  std::set<std::string> used;
  trees::LearnerParams out;
  const auto k = trees::model_kind_from_string(kind);
  if (k == trees::ModelKind::DT) {
    DtParams p;
    fill(j, p, used);
    out = p;
  } else if (k == trees::ModelKind::RF) {
    RfParams p;
    fill(j, p, used);
    out = p;
  } else {
    GbdtParams p;
    fill(j, p, used);
    out = p;
  }
  reject_unknown(j, used);
  return out;
}

trees::LearnerParams apply_point(trees::LearnerParams base, const json& point) {
  json j = params_to_json(base);
  for (auto it = point.begin(); it != point.end(); ++it) {
    if (!j.contains(it.key())) throw ConfigError(it.key(), "not a parameter of " + j["kind"].get<std::string>());
    j[it.key()] = it.value();
  }
  return params_from_json(j);
}

json ensemble_to_json(const trees::TreeEnsemble& m) {
  json trees_j = json::array();
  for (const auto& t : m.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value, n.cover}));
    }
    trees_j.push_back(std::move(nodes));
  }
  return {{"kind", kind_name(m.kind)},
          {"base_score", m.base_score},
          {"n_features", m.n_features},
          {"feature_names", m.feature_names},
          {"params", params_to_json(m.params)},
          {"bin_edges", m.bin_edges},
          {"train_loss", m.train_loss},
          {"trees", std::move(trees_j)}};
}

trees::TreeEnsemble ensemble_from_json(const json& j) {
  try {
    trees::TreeEnsemble m;
    m.kind = trees::model_kind_from_string(j.at("kind").get<std::string>());
    m.base_score = j.at("base_score").get<double>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.params = params_from_json(j.at("params"));
    m.bin_edges = j.at("bin_edges").get<std::vector<std::vector<double>>>();
    m.train_loss = j.at("train_loss").get<std::vector<double>>();
    for (const auto& tj : j.at("trees")) {
      trees::Tree t;
      for (const auto& nj : tj) {
        trees::Node n;
        n.feature = nj.at(0).get<int>();
        n.threshold = nj.at(1).get<double>();
        n.left = nj.at(2).get<int>();
        n.right = nj.at(3).get<int>();
        n.value = nj.at(4).get<double>();
        n.cover = nj.at(5).get<double>();
        t.nodes.push_back(n);
      }
      const int count = static_cast<int>(t.nodes.size());
      for (const auto& n : t.nodes) {
        if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count ||
                             n.feature >= static_cast<int>(m.n_features))) {
          throw IntegrityError("tree node references are out of range");
        }
      }
      if (t.nodes.empty()) throw IntegrityError("tree without nodes");
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed model: ") + e.what());
  }
}

json encoder_to_json(const encode::Encoder& e) {
  return {{"mode", encode::to_string(e.mode)},
          {"gender", e.gender.categories},
          {"occupation", e.occupation.categories},
          {"engineered", e.engineered}};
}

encode::Encoder encoder_from_json(const json& j) {
  encode::Encoder e;
  e.mode = encode::encoding_mode_from_string(j.at("mode").get<std::string>());
  e.gender.categories = j.at("gender").get<std::vector<std::string>>();
  e.occupation.categories = j.at("occupation").get<std::vector<std::string>>();
  e.engineered = j.at("engineered").get<std::vector<std::string>>();
  return e;
}

json features_to_json(const std::optional<store::FeatureSpec>& f) {
  if (!f) return nullptr;
  json j = {{"version", store::to_string(f->version)}};
  if (f->version == store::FeatureVersion::V3) j["countries"] = f->countries;
  return j;
}

std::optional<store::FeatureSpec> features_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "none" || s == "kyc") return std::nullopt;
    return store::FeatureSpec{store::feature_version_from_string(s), {}};
  }
  store::FeatureSpec f;
  f.version = store::feature_version_from_string(j.at("version").get<std::string>());
  if (j.contains("countries")) f.countries = j.at("countries").get<std::vector<std::string>>();
  return f;
}

json report_to_json(const metrics::ClassificationReport& r) {
  return {{"auroc", r.auroc},
          {"accuracy", r.accuracy},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"threshold", r.threshold},
          {"confusion",
           {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}}}};
}

metrics::ClassificationReport report_from_json(const json& j) {
  metrics::ClassificationReport r;
  r.auroc = j.at("auroc").get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.threshold = j.at("threshold").get<double>();
  const auto& c = j.at("confusion");
  r.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                 c.at("tn").get<std::size_t>(), c.at("fn").get<std::size_t>()};
  return r;
}

json summary_to_json(const metrics::RunSummary& s, bool include_timings) {
  json j = {{"values", s.values}, {"mean", s.mean}, {"sd", s.sd},
            {"runs", s.runs},     {"single_run", s.single_run}, {"formatted", s.format()}};
  if (include_timings) {
    j["total_seconds"] = s.total_seconds;
    j["mean_seconds"] = s.mean_seconds;
  }
  return j;
}

json ttest_to_json(const metrics::TTestResult& t) {
  auto num = [](double v) -> json {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
  };
  return {{"t", num(t.t)},
          {"df", t.df},
          {"p_value", t.p_value},
          {"significant", t.significant},
          {"degenerate", t.degenerate},
          {"alpha", t.alpha}};
}

namespace {

json classes_json(const store::ClassSizes& c) {
  return {{"label0", c.label0}, {"label1", c.label1}, {"majority_fraction", c.majority_fraction}};
}

json histogram_json(const store::Histogram& h) {
  return {{"lo", h.lo}, {"width", h.width}, {"label0", h.label0}, {"label1", h.label1}};
}

}  // namespace

json profile_to_json(const store::DatasetProfile& p) {
  json gender = json::array();
  for (const auto& g : p.gender) gender.push_back({{"gender", g.gender}, {"label0", g.label0}, {"label1", g.label1}});
  json occ = json::array();
  for (const auto& o : p.top_occupations) {
    occ.push_back({{"occupation", o.occupation},
                   {"total", o.total},
                   {"risky", o.risky},
                   {"risky_fraction", o.risky_fraction}});
  }
  return {{"n_customers", p.n_customers},
          {"classes", classes_json(p.classes)},
          {"repeated_name_classes", classes_json(p.repeated_name_classes)},
          {"gender", std::move(gender)},
          {"top_occupations", std::move(occ)},
          {"age", histogram_json(p.age)},
          {"tenur", histogram_json(p.tenur)}};
}

}  // namespace amlrisk::serialize
