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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "amlrisk/datagen.hpp"
#include "amlrisk/encode.hpp"
#include "amlrisk/explain.hpp"
#include "amlrisk/harness.hpp"
#include "amlrisk/serialize.hpp"
#include "amlrisk/server.hpp"
#include "amlrisk/service.hpp"
#include "amlrisk/store.hpp"

namespace {

using nlohmann::json;
using namespace amlrisk;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

// Options shared by every command that builds a pipeline.
struct PipelineFlags {
  std::string features = "v2";
  std::vector<std::string> countries;
  std::string encoding = "onehot";
  std::string imbalance = "undersample_dev";
  std::string learner = "gbdt";
  std::string params;
  std::string grid = "none";
  std::size_t smote_k = 5;
  std::uint64_t seed = 7;

  void add(CLI::App* cmd) {
    cmd->add_option("--features", features, "Engineered features: kyc, v1, v2 or v3")
        ->check(CLI::IsMember({"kyc", "v1", "v2", "v3"}))
        ->capture_default_str();
    cmd->add_option("--countries", countries, "V3 per-country columns (default: most frequent)")
        ->delimiter(',');
    cmd->add_option("--encoding", encoding, "Categorical encoding: label or onehot")
        ->check(CLI::IsMember({"label", "onehot"}))
        ->capture_default_str();
    cmd->add_option("--imbalance", imbalance,
                    "none, undersample_dev, oversample_dev, smote_dev, class_weight or "
                    "balance_upfront")
        ->capture_default_str();
    cmd->add_option("--learner", learner, "Model family: dt, rf or gbdt")
        ->check(CLI::IsMember({"dt", "rf", "gbdt"}))
        ->capture_default_str();
    cmd->add_option("--params", params, "Learner parameters as a JSON object");
    cmd->add_option("--grid", grid, "none, rf-table, xgb-table, lgbm-table or a JSON grid object")
        ->capture_default_str();
    cmd->add_option("--smote-k", smote_k, "SMOTE neighbour count")->capture_default_str();
    cmd->add_option("--seed", seed, "Base seed")->capture_default_str();
  }

  harness::PipelineSpec build() const {
    harness::PipelineSpec spec;
    if (features != "kyc") {
      store::FeatureSpec f;
      f.version = store::feature_version_from_string(features);
      f.countries = countries;
      spec.features = f;
    }
    spec.encoding = encode::encoding_mode_from_string(encoding);
    spec.imbalance = harness::imbalance_from_string(imbalance);
    json p = params.empty() ? json::object() : json::parse(params);
    if (!p.is_object()) throw ConfigError("params", "must be a JSON object");
    if (p.contains("kind") && p["kind"] != learner) throw ConfigError("params.kind", "disagrees with --learner");
    if (learner == "gbdt" && params.empty()) {
      spec.learner = service::FinalSpec::deployment_default().pipeline.learner;
    } else {
      p["kind"] = learner;
      spec.learner = serialize::params_from_json(p);
    }
    if (grid == "rf-table") {
      spec.grid = harness::rf_table_grid();
    } else if (grid == "xgb-table") {
      spec.grid = harness::xgb_table_grid();
    } else if (grid == "lgbm-table") {
      spec.grid = harness::lgbm_table_grid();
    } else if (grid != "none") {
      spec.grid = harness::GridSpec::from_json(json::parse(grid));
    }
    spec.smote_k = smote_k;
    spec.seed = seed;
    return spec;
  }
};

// Applies values from the JSON config file to options of `cmd` that were not set on
// the command line. Keys are long flag names without dashes; a nested object under
// the subcommand's name takes precedence over top-level keys.
void apply_config(CLI::App& app, CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw CLI::ValidationError("--config", "must hold a JSON object");
  json merged = json::object();
  for (const auto& [k, v] : cfg.items()) {
    bool is_section = false;
    for (const auto* sub : app.get_subcommands({})) is_section |= sub->get_name() == k;
    if (!is_section) merged[k] = v;
  }
  if (cfg.contains(cmd->get_name())) {
    for (const auto& [k, v] : cfg[cmd->get_name()].items()) merged[k] = v;
  }
  for (const auto& [key, value] : merged.items()) {
    CLI::Option* opt = nullptr;
    try {
      opt = cmd->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      try {
        std::string dashed = key;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        opt = cmd->get_option("--" + dashed);
      } catch (const CLI::OptionNotFound&) {
        throw CLI::ValidationError("--config", "unknown key '" + key + "' for " + cmd->get_name());
      }
    }
    if (opt->count() > 0) continue;
    std::vector<std::string> inputs;
    auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array() && opt->get_expected_max() > 1) {
      for (const auto& v : value) inputs.push_back(text(v));
    } else {
      inputs.push_back(text(value));
    }
    for (const auto& s : inputs) opt->add_result(s);
    opt->run_callback();
  }
}

store::FeatureSpec feature_spec_of(const std::string& version, const std::vector<std::string>& countries,
                                   const store::Store& db) {
  store::FeatureSpec f;
  f.version = store::feature_version_from_string(version);
  f.countries = countries;
  if (f.version == store::FeatureVersion::V3 && f.countries.empty()) f.countries = db.top_countries();
  f.validate();
  return f;
}

std::string default_label(const harness::ExperimentReport& r) {
  return r.protocol + "-" + r.spec_fingerprint.substr(0, 8);
}

void write_report(const std::string& out_dir, const std::string& label,
                  const harness::ExperimentReport& r) {
  const std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
  std::filesystem::create_directories(dir);
  const std::string name = label.empty() ? default_label(r) : label;
  harness::write_json(dir / (name + ".report"), r.to_json());
  harness::append_leaderboard(dir / "leaderboard.csv", r, name);
}

service::ModelArtifact artifact_for(store::Store& db, const std::string& model_path) {
  if (!model_path.empty()) return service::load_model(model_path);
  const auto rec = db.latest_model();
  if (!rec) throw NotFoundError("the store has no trained model; run 'train' first");
  return service::deserialize(rec->artifact);
}

service::CmlPolicy policy_of(double max_age, long long changes) {
  service::CmlPolicy p;
  p.max_age_seconds = max_age > 0 ? std::optional<double>(max_age) : std::nullopt;
  p.change_threshold = changes >= 0 ? std::optional<std::size_t>(changes) : std::nullopt;
  p.validate();
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"amlrisk: synthetic AML risk-scoring pipeline"};
  app.require_subcommand(1);
  std::string config_path;
  unsigned threads = 0;
  app.add_option("--config", config_path, "JSON file with flag values; command-line flags win");
  app.add_option("--threads", threads, "Worker threads (0 = all cores); results do not depend on it");
  app.fallthrough();

  std::string db_path = "amlrisk.db";
  auto add_db = [&](CLI::App* c) {
    c->add_option("--db", db_path, "SQLite store path")->capture_default_str();
  };

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset as four CSV files");
  datagen::GenConfig gcfg;
  std::string gen_out = "data";
  std::vector<std::string> signal_flags;
  bool no_signal = false;
  gen->add_option("--n", gcfg.n_customers, "Number of customers")->capture_default_str();
  gen->add_option("--imbalance", gcfg.majority_ratio, "Majority-class fraction")->capture_default_str();
  gen->add_option("--seed", gcfg.seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen->add_option("--occupations", gcfg.n_occupations, "Occupation vocabulary size")->capture_default_str();
  gen->add_option("--signal", signal_flags, "Planted signal strength as motif=value (repeatable)");
  gen->add_flag("--no-signal", no_signal, "Disable every planted signal");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load the four CSV files into the store");
  std::string data_dir = "data";
  add_db(ingest);
  ingest->add_option("--data", data_dir, "Directory holding kyc.csv, cash_trxns.csv, emt_trxns.csv, wire_trxns.csv")
      ->capture_default_str();

  // explore
  auto* explore = app.add_subcommand("explore", "Dataset profile: classes, gender, occupations, histograms");
  std::size_t explore_top = 10;
  add_db(explore);
  explore->add_option("--top-k", explore_top, "Occupations listed")->capture_default_str();

  // features
  auto* feats = app.add_subcommand("features", "Materialize an engineered feature table");
  std::string feat_version = "v2";
  std::vector<std::string> feat_countries;
  add_db(feats);
  feats->add_option("--version", feat_version, "v1, v2 or v3")
      ->check(CLI::IsMember({"v1", "v2", "v3"}))
      ->capture_default_str();
  feats->add_option("--countries", feat_countries, "V3 per-country columns (default: most frequent)")
      ->delimiter(',');

  // train
  auto* train = app.add_subcommand("train", "Train, register and optionally save the deployable model");
  PipelineFlags train_flags;
  double holdout = 0.1;
  std::size_t cv_folds = 10;
  std::string train_out;
  add_db(train);
  train_flags.add(train);
  train->add_option("--holdout", holdout, "Stratified test fraction")->capture_default_str();
  train->add_option("--cv-folds", cv_folds, "Folds for the grid search")->capture_default_str();
  train->add_option("--out", train_out, "Also write the artifact to this file");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Estimate AUROC with a repeated protocol");
  PipelineFlags eval_flags;
  std::string protocol = "monte-carlo";
  std::size_t outer = 10, inner = 10, repeats = 30;
  double test_fraction = 0.25;
  std::string eval_out = "reports", eval_label;
  add_db(evaluate);
  eval_flags.add(evaluate);
  evaluate->add_option("--protocol", protocol, "monte-carlo or nested-kfold")
      ->check(CLI::IsMember({"monte-carlo", "nested-kfold"}))
      ->capture_default_str();
  evaluate->add_option("--outer", outer, "Outer folds (nested-kfold)")->capture_default_str();
  evaluate->add_option("--inner", inner, "Inner folds (nested-kfold) or repeats (monte-carlo)")
      ->capture_default_str();
  evaluate->add_option("--repeats", repeats, "Monte Carlo repetitions")->capture_default_str();
  evaluate->add_option("--test-fraction", test_fraction, "Monte Carlo test share")->capture_default_str();
  evaluate->add_option("--out", eval_out, "Report directory")->capture_default_str();
  evaluate->add_option("--label", eval_label, "Report name and leaderboard label");

  // compare
  auto* cmp = app.add_subcommand("compare", "t-test verdict for two report files");
  std::string report_a, report_b;
  bool welch = false;
  cmp->add_option("a", report_a, "First report")->required();
  cmp->add_option("b", report_b, "Second report")->required();
  cmp->add_flag("--welch", welch, "Unequal-variance test");

  // sensitivity
  auto* sens = app.add_subcommand("sensitivity", "AUROC against training-set size");
  PipelineFlags sens_flags;
  std::vector<std::size_t> sizes = harness::default_train_sizes();
  std::size_t sens_repeats = 10;
  double sens_fraction = 0.25;
  std::string sens_out = "reports";
  add_db(sens);
  sens_flags.add(sens);
  sens->add_option("--sizes", sizes, "Training sizes; 0 means all available rows")
      ->delimiter(',')
      ->capture_default_str();
  sens->add_option("--repeats", sens_repeats, "Repetitions per size")->capture_default_str();
  sens->add_option("--test-fraction", sens_fraction, "Fixed holdout share")->capture_default_str();
  sens->add_option("--out", sens_out, "Report directory")->capture_default_str();

  // megatest
  auto* mega = app.add_subcommand("megatest", "Score discarded majority rows alongside the test fold");
  PipelineFlags mega_flags;
  std::size_t mega_repeats = 30;
  double mega_fraction = 0.1;
  std::string mega_out = "reports";
  add_db(mega);
  mega_flags.add(mega);
  mega->add_option("--repeats", mega_repeats, "Repetitions")->capture_default_str();
  mega->add_option("--test-fraction", mega_fraction, "Standard test share")->capture_default_str();
  mega->add_option("--out", mega_out, "Report directory")->capture_default_str();

  // explain
  auto* expl = app.add_subcommand("explain", "SHAP attributions for one customer or the whole store");
  std::string expl_model, expl_cust;
  std::size_t expl_top = 10;
  bool expl_aggregate = false;
  add_db(expl);
  expl->add_option("--model", expl_model, "Artifact file (default: latest registered model)");
  expl->add_option("--cust", expl_cust, "Customer id; global importance when omitted");
  expl->add_option("--top-k", expl_top, "Features listed")->capture_default_str();
  expl->add_flag("--aggregate-onehot", expl_aggregate, "Sum one-hot columns per source field");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP scoring service");
  service::ServerOptions sopt;
  std::string serve_model, reports_dir = "reports";
  double max_age = 24.0 * 3600.0;
  long long changes = 100;
  add_db(serve);
  serve->add_option("--host", sopt.host, "Bind address")->capture_default_str();
  serve->add_option("--port", sopt.port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_option("--token", sopt.token, "Require this bearer token");
  serve->add_option("--reports", reports_dir, "Directory with leaderboard.csv")->capture_default_str();
  serve->add_option("--model", serve_model, "Artifact file to activate instead of the latest");
  serve->add_option("--max-age", max_age, "Retrain after this many seconds (0 disables)")
      ->capture_default_str();
  serve->add_option("--changes", changes, "Retrain after more label events than this (-1 disables)")
      ->capture_default_str();

  // retrain
  auto* retrain = app.add_subcommand("retrain", "Apply the retrain policy once");
  bool force = false;
  std::string retrain_out;
  add_db(retrain);
  retrain->add_flag("--force", force, "Retrain regardless of the policy");
  retrain->add_option("--max-age", max_age, "Maximum model age in seconds (0 disables)")
      ->capture_default_str();
  retrain->add_option("--changes", changes, "Label-event threshold (-1 disables)")->capture_default_str();
  retrain->add_option("--out", retrain_out, "Also write the new artifact to this file");

  try {
    app.parse(argc, argv);
    CLI::App* cmd = app.get_subcommands().front();
    if (!config_path.empty()) apply_config(app, cmd, config_path);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    set_thread_count(threads);
    if (*gen) {
      if (no_signal) gcfg.signal_strengths = datagen::zero_signals();
      for (const auto& s : signal_flags) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("signal", "expected motif=value, got '" + s + "'");
        gcfg.signal_strengths[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
      }
      const auto ds = datagen::generate_dataset(gcfg);
      datagen::write_csv(ds, gen_out);
      print({{"out", gen_out},
             {"kyc", ds.kyc.size()},
             {"wire", ds.wire.size()},
             {"emt", ds.emt.size()},
             {"cash", ds.cash.size()}});
    } else if (*ingest) {
      store::Store db(db_path);
      db.ingest_csv(data_dir);
      print({{"db", db_path},
             {"kyc", db.row_count("kyc")},
             {"wire_trxns", db.row_count("wire_trxns")},
             {"emt_trxns", db.row_count("emt_trxns")},
             {"cash_trxns", db.row_count("cash_trxns")},
             {"fingerprint", db.data_fingerprint()}});
    } else if (*explore) {
      store::Store db(db_path);
      print(serialize::profile_to_json(db.profile(explore_top)));
    } else if (*feats) {
      store::Store db(db_path);
      const auto f = feature_spec_of(feat_version, feat_countries, db);
      db.materialize_features(f);
      print({{"table", store::feature_table_name(f.version)},
             {"rows", db.row_count(store::feature_table_name(f.version))},
             {"columns", store::feature_names(f)}});
    } else if (*train) {
      store::Store db(db_path);
      service::FinalSpec fs;
      fs.pipeline = train_flags.build();
      fs.holdout_fraction = holdout;
      fs.cv_folds = cv_folds;
      const auto a = service::train_final(db, fs);
      if (!train_out.empty()) service::save_model(a, train_out);
      print({{"model_version", a.version_id},
             {"holdout", serialize::report_to_json(a.holdout)},
             {"hyperparameters", a.hyperparameters}});
    } else if (*evaluate) {
      store::Store db(db_path);
      auto spec = eval_flags.build();
      harness::resolve_countries(spec, db);
      const auto raw = encode::load_raw(db, spec.features);
      harness::ExperimentReport r;
      if (protocol == "nested-kfold") {
        r = harness::nested_kfold_eval(spec, raw, outer, inner);
      } else {
        harness::MonteCarloOptions opt;
        opt.repeats = repeats;
        opt.test_fraction = test_fraction;
        if (evaluate->get_option("--inner")->count() > 0) opt.inner.repeats = inner;
        r = harness::monte_carlo_eval(spec, raw, opt);
      }
      write_report(eval_out, eval_label, r);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      print({{"protocol", r.protocol},
             {"auroc", r.summary.format()},
             {"mean", r.summary.mean},
             {"sd", r.summary.sd},
             {"runs", r.summary.runs},
             {"fits", r.fits},
             {"leakage", r.leakage},
             {"wall_seconds", r.wall_seconds}});
    } else if (*cmp) {
      const auto a = harness::ExperimentReport::from_json(harness::read_json(report_a));
      const auto b = harness::ExperimentReport::from_json(harness::read_json(report_b));
      const auto v = harness::compare(a, b, welch);
      std::cout << v.text << "\n";
    } else if (*sens) {
      store::Store db(db_path);
      auto spec = sens_flags.build();
      harness::resolve_countries(spec, db);
      const auto raw = encode::load_raw(db, spec.features);
      const auto r = harness::size_sensitivity(spec, raw, sizes, sens_repeats, sens_fraction);
      std::filesystem::create_directories(sens_out);
      harness::write_json(std::filesystem::path(sens_out) / "sensitivity.json", r.to_json());
      json rows = json::array();
      for (const auto& p : r.points) {
        rows.push_back({{"size", p.size}, {"actual", p.actual}, {"auroc", p.summary.format()}});
      }
      print(rows);
    } else if (*mega) {
      store::Store db(db_path);
      auto spec = mega_flags.build();
      harness::resolve_countries(spec, db);
      const auto raw = encode::load_raw(db, spec.features);
      const auto r = harness::mega_test(spec, raw, mega_repeats, mega_fraction);
      std::filesystem::create_directories(mega_out);
      harness::write_json(std::filesystem::path(mega_out) / "megatest.json", r.to_json());
      print({{"standard", r.standard.summary.format()},
             {"mega", r.mega.summary.format()},
             {"t", r.test.t},
             {"p_value", r.test.p_value},
             {"significant", r.test.significant}});
    } else if (*expl) {
      store::Store db(db_path);
      const auto a = artifact_for(db, expl_model);
      const auto names = a.feature_names();
      if (!expl_cust.empty()) {
        print(service::score_customer(db, a, expl_cust, expl_top).to_json());
      } else {
        const auto raw = encode::load_raw(db, a.features);
        const auto d = encode::assemble(raw, a.encoder);
        const auto ranking = explain::global_importance(a.model, d.X, names, expl_aggregate);
        json rows = json::array();
        for (std::size_t i = 0; i < ranking.size() && i < expl_top; ++i) {
          rows.push_back({{"feature", ranking[i].feature}, {"mean_abs", ranking[i].mean_abs}});
        }
        print({{"model_version", a.version_id}, {"importance", rows}});
      }
    } else if (*serve) {
      store::Store db(db_path);
      service::ModelService svc(db, service::FinalSpec::deployment_default(), policy_of(max_age, changes));
      if (!serve_model.empty()) {
        svc.activate(std::make_shared<const service::ModelArtifact>(service::load_model(serve_model)));
      } else if (svc.load_latest()) {
        svc.set_spec(service::FinalSpec::from_json(svc.active()->spec));
      } else {
        std::cerr << "no registered model; training one\n";
        const auto r = svc.cml_tick(true);
        if (!r.error.empty()) throw Error(r.error);
      }
      sopt.reports_dir = reports_dir;
      service::HttpServer http(svc, sopt);
      const int port = http.start();
      std::cerr << "serving on http://" << sopt.host << ":" << port << "\n";
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      while (!g_stop.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
        if (svc.retrain_due() && !svc.retraining()) svc.retrain_async(false);
      }
      http.stop();
      svc.wait_idle();
    } else if (*retrain) {
      store::Store db(db_path);
      service::ModelService svc(db, service::FinalSpec::deployment_default(), policy_of(max_age, changes));
      if (svc.load_latest()) svc.set_spec(service::FinalSpec::from_json(svc.active()->spec));
      const auto r = svc.cml_tick(force);
      if (!r.error.empty()) throw Error(r.error);
      if (r.retrained && !retrain_out.empty()) service::save_model(*r.artifact, retrain_out);
      print({{"retrained", r.retrained},
             {"reason", r.reason},
             {"model_version", r.artifact ? json(r.artifact->version_id) : json()}});
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
