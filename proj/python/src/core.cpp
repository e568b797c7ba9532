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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "amlrisk/datagen.hpp"
#include "amlrisk/encode.hpp"
#include "amlrisk/explain.hpp"
#include "amlrisk/harness.hpp"
#include "amlrisk/metrics.hpp"
#include "amlrisk/serialize.hpp"
#include "amlrisk/service.hpp"
#include "amlrisk/store.hpp"

namespace py = pybind11;
using namespace amlrisk;
using nlohmann::json;

namespace {

py::array_t<double> to_numpy(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) view(r, c) = m(r, c);
  }
  return out;
}

Matrix from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ParameterError("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

datagen::GenConfig gen_config(std::size_t n, double majority_ratio, std::uint64_t seed,
                              const std::optional<std::map<std::string, double>>& signals) {
  datagen::GenConfig c;
  c.n_customers = n;
  c.majority_ratio = majority_ratio;
  c.seed = seed;
  if (signals) c.signal_strengths = *signals;
  return c;
}

std::optional<store::FeatureSpec> feature_spec(const std::string& version,
                                               const std::vector<std::string>& countries) {
  if (version == "kyc") return std::nullopt;
  return store::FeatureSpec{store::feature_version_from_string(version), countries};
}

std::string run_evaluation(const store::Store& db, const std::string& pipeline_json,
                           const std::string& protocol, std::size_t repeats, std::size_t outer,
                           std::size_t inner, double test_fraction) {
  auto spec = harness::PipelineSpec::from_json(json::parse(pipeline_json));
  harness::resolve_countries(spec, db);
  const auto raw = encode::load_raw(db, spec.features);
  py::gil_scoped_release release;
  if (protocol == "monte-carlo") {
    harness::MonteCarloOptions opt;
    opt.repeats = repeats;
    opt.test_fraction = test_fraction;
    return harness::monte_carlo_eval(spec, raw, opt).to_json().dump();
  }
  if (protocol == "nested-kfold") return harness::nested_kfold_eval(spec, raw, outer, inner).to_json().dump();
  throw ConfigError("protocol", "expected monte-carlo or nested-kfold");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the amlrisk toolkit";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NotFoundError>(m, "NotFoundError", PyExc_KeyError);
  py::register_exception<IntegrityError>(m, "IntegrityError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "generate_csv",
      [](const std::filesystem::path& out, std::size_t n, double majority_ratio, std::uint64_t seed,
         const std::optional<std::map<std::string, double>>& signals) {
        const auto ds = datagen::generate_dataset(gen_config(n, majority_ratio, seed, signals));
        datagen::write_csv(ds, out);
        return py::dict(py::arg("customers") = ds.kyc.size(), py::arg("cash") = ds.cash.size(),
                        py::arg("emt") = ds.emt.size(), py::arg("wire") = ds.wire.size());
      },
      py::arg("out_dir"), py::arg("n") = 20000, py::arg("majority_ratio") = 0.972, py::arg("seed") = 7,
      py::arg("signals") = py::none(),
      "Writes kyc.csv, cash_trxns.csv, emt_trxns.csv and wire_trxns.csv to out_dir.");

  m.def("default_signals", &datagen::default_signals);

  m.def(
      "auroc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) { return metrics::auroc(scores, labels); },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "t_test",
      [](const std::vector<double>& a, const std::vector<double>& b, bool welch) {
        return serialize::ttest_to_json(metrics::t_test(a, b, welch)).dump();
      },
      py::arg("a"), py::arg("b"), py::arg("welch") = false, "Returns the result as a JSON string.");

  py::class_<store::Store>(m, "Store")
      .def(py::init<const std::filesystem::path&>(), py::arg("path") = ":memory:")
      .def("ingest_csv", &store::Store::ingest_csv, py::arg("data_dir"))
      .def(
          "ingest_generated",
          [](store::Store& s, std::size_t n, double majority_ratio, std::uint64_t seed,
             const std::optional<std::map<std::string, double>>& signals) {
            s.ingest(datagen::generate_dataset(gen_config(n, majority_ratio, seed, signals)));
          },
          py::arg("n") = 20000, py::arg("majority_ratio") = 0.972, py::arg("seed") = 7,
          py::arg("signals") = py::none())
      .def("row_count", &store::Store::row_count, py::arg("table"))
      .def(
          "profile",
          [](const store::Store& s, std::size_t top_k) { return serialize::profile_to_json(s.profile(top_k)).dump(); },
          py::arg("top_k") = 10)
      .def(
          "build_features",
          [](const store::Store& s, const std::string& version, const std::vector<std::string>& countries) {
            auto spec = feature_spec(version, countries);
            if (!spec) throw ParameterError("feature version must be v1, v2 or v3");
            if (spec->version == store::FeatureVersion::V3 && spec->countries.empty()) {
              spec->countries = s.top_countries();
            }
            const auto t = s.build_features(*spec);
            return py::make_tuple(t.names, t.cust_ids, to_numpy(t.values));
          },
          py::arg("version") = "v2", py::arg("countries") = std::vector<std::string>{},
          "Returns (names, cust_ids, values).")
      .def("record_label", &store::Store::record_label, py::arg("cust_id"), py::arg("label"),
           py::arg("source") = "python")
      .def("events_since", &store::Store::events_since, py::arg("event_id") = 0);

  m.def("evaluate", &run_evaluation, py::arg("store"), py::arg("pipeline_json"),
        py::arg("protocol") = "monte-carlo", py::arg("repeats") = 30, py::arg("outer") = 10,
        py::arg("inner") = 10, py::arg("test_fraction") = 0.25,
        "Runs an evaluation protocol; returns the report as a JSON string.");

  m.def("default_spec", [] { return service::FinalSpec::deployment_default().to_json().dump(); });

  py::class_<service::ModelArtifact>(m, "Model")
      .def_readonly("version_id", &service::ModelArtifact::version_id)
      .def_property_readonly("feature_names", &service::ModelArtifact::feature_names)
      .def_property_readonly("holdout_json",
                             [](const service::ModelArtifact& a) { return serialize::report_to_json(a.holdout).dump(); })
      .def("to_json", [](const service::ModelArtifact& a) { return service::serialize(a); })
      .def("save", [](const service::ModelArtifact& a, const std::filesystem::path& p) { service::save_model(a, p); })
      .def_static("load", &service::load_model, py::arg("path"))
      .def_static("from_json", &service::deserialize, py::arg("text"))
      .def(
          "predict_proba",
          [](const service::ModelArtifact& a, const py::array_t<double, py::array::c_style | py::array::forcecast>& X) {
            return trees::predict_proba(a.model, from_numpy(X));
          },
          py::arg("X"))
      .def(
          "design_matrix",
          [](const service::ModelArtifact& a, const store::Store& s) {
            const auto raw = encode::load_raw(s, a.features);
            const auto d = encode::assemble(raw, a.encoder);
            return py::make_tuple(d.cust_ids, to_numpy(d.X), d.y);
          },
          py::arg("store"), "Returns (cust_ids, X, labels) encoded for this model.")
      .def(
          "score",
          [](const service::ModelArtifact& a, const store::Store& s, const std::string& id, std::size_t k) {
            return service::score_customer(s, a, id, k).to_json().dump();
          },
          py::arg("store"), py::arg("cust_id"), py::arg("top_k") = 5)
      .def(
          "importance",
          [](const service::ModelArtifact& a, const store::Store& s, bool aggregate) {
            const auto raw = encode::load_raw(s, a.features);
            const auto d = encode::assemble(raw, a.encoder);
            std::vector<std::pair<std::string, double>> out;
            for (const auto& e : explain::global_importance(a.model, d.X, d.names, aggregate)) {
              out.emplace_back(e.feature, e.mean_abs);
            }
            return out;
          },
          py::arg("store"), py::arg("aggregate_onehot") = false);

  m.def(
      "train",
      [](store::Store& s, const std::optional<std::string>& spec_json) {
        const auto spec = spec_json ? service::FinalSpec::from_json(json::parse(*spec_json))
                                    : service::FinalSpec::deployment_default();
        py::gil_scoped_release release;
        return service::train_final(s, spec);
      },
      py::arg("store"), py::arg("spec_json") = py::none(),
      "Trains, registers and returns a model artifact.");
}
