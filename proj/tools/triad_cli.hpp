#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "triad/domain/case_io.hpp"
#include "triad/domain/cohort_io.hpp"
#include "triad/domain/simulate.hpp"
#include "triad/explain/report.hpp"
#include "triad/hosting/http.hpp"
#include "triad/learn/gbdt.hpp"
#include "triad/learn/logistic.hpp"
#include "triad/learn/metrics.hpp"
#include "triad/learn/model_io.hpp"
#include "triad/learn/model_selection.hpp"
#include "triad/survey/survey.hpp"

#include <CLI11.hpp>

namespace triad::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;

namespace detail {

inline CohortDataset read_cohort(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return load_cohort(in);
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write to " + path.string() + " failed");
}

inline json metrics_json(const learn::Metrics& m, std::optional<double> loss = std::nullopt) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j = {{"n", m.n},
            {"threshold", m.threshold},
            {"tp", m.tp},
            {"fp", m.fp},
            {"tn", m.tn},
            {"fn", m.fn},
            {"accuracy", m.accuracy},
            {"sensitivity", opt(m.sensitivity)},
            {"specificity", opt(m.specificity)},
            {"auc", opt(m.auc)}};
  if (loss) j["log_loss"] = *loss;
  return j;
}

// Scores a model on a cohort whose columns may be a superset of its schema.
inline json score(const learn::TreeEnsemble& model, const CohortDataset& data, double threshold) {
  const auto ds = learn::select_features(data, model.schema);
  const auto p = learn::predict_all(model, ds);
  return metrics_json(learn::evaluate_scores(p, ds.labels, threshold), learn::log_loss(p, ds.labels));
}

inline std::vector<learn::TrainConfig> read_grid(const std::string& path) {
  const auto j = read_json(path);
  if (!j.is_array()) throw FormatError(path + ": expected an array of configs");
  std::vector<learn::TrainConfig> grid;
  for (const auto& c : j) grid.push_back(learn::train_config_from_json(c));
  return grid;
}

// Survey input: a store log (records carry "type") or one survey record
// per line.
struct SurveyInput {
  std::vector<survey::SurveyRecord> records;
  std::vector<survey::QuestionnaireResponse> questionnaire;
};

inline survey::SurveyRecord survey_record_from_json(const json& j) {
  survey::SurveyRecord r;
  r.setting = pipeline::parse_setting(j.at("setting").get<std::string>());
  r.agree = j.at("agree").get<int>();
  r.understand = j.at("understand").get<int>();
  r.use = j.at("use").get<int>();
  r.findrisk_risk = scales::parse_risk_category(j.value("findrisk_risk", "low"));
  r.model_risk = scales::parse_risk_category(j.value("model_risk", "low"));
  return r;
}

inline json to_json(const survey::SurveyRecord& r) {
  return {{"setting", std::string(pipeline::to_string(r.setting))},
          {"agree", r.agree},
          {"understand", r.understand},
          {"use", r.use},
          {"findrisk_risk", std::string(scales::to_string(r.findrisk_risk))},
          {"model_risk", std::string(scales::to_string(r.model_risk))}};
}

inline SurveyInput read_survey(const std::string& path) {
  fs::path p = path;
  if (fs::is_directory(p)) p /= hosting::Store::kLogName;
  if (!fs::exists(p)) throw DataError("cannot open " + p.string());
  const auto lines = hosting::read_log(p);
  SurveyInput in;
  if (!lines.empty() && lines.front().contains("type")) {
    const auto st = hosting::replay(lines);
    in.records = hosting::survey_records(st);
    in.questionnaire = st.questionnaire;
    return in;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      in.records.push_back(survey_record_from_json(lines[i]));
    } catch (const json::exception& e) {
      throw ParseError(i + 1, e.what());
    } catch (const DomainError& e) {
      throw ParseError(i + 1, e.what());
    }
  }
  return in;
}

inline std::string summary_text(const std::vector<survey::ScoreSummary>& rows) {
  std::ostringstream out;
  out << "group\tn\tagree\tunderstand\tuse\n";
  for (const auto& r : rows)
    out << r.group << '\t' << r.agree.n << '\t' << survey::format_ci(r.agree) << '\t'
        << survey::format_ci(r.understand) << '\t' << survey::format_ci(r.use) << '\n';
  return out.str();
}

// Emits the run report to the --report file, or to stdout unless the
// command already printed its payload there.
struct Reporter {
  std::string path;
  std::ostream& out;
  bool stdout_taken = false;

  void emit(const json& report) const {
    if (!path.empty()) write_text(path, report.dump(2) + "\n");
    else if (!stdout_taken) out << report.dump(2) << '\n';
  }
};

}  // namespace detail

// Runs one invocation. args[0] is the program name.
inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Three-stage diabetes risk decision support"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string report_path;
  app.add_option("--report", report_path, "Write the run report to this file");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic cohort or survey");
  std::string sim_kind = "cohort", sim_out;
  long sim_n = 4597;
  double sim_rate = 0.10, sim_missing = 0.0;
  std::uint64_t sim_seed = 7;
  sim->add_option("--kind", sim_kind, "cohort or survey")->check(CLI::IsMember({"cohort", "survey"}));
  sim->add_option("--n", sim_n, "Rows")->check(CLI::PositiveNumber);
  sim->add_option("--rate", sim_rate, "Positive rate (cohort)");
  sim->add_option("--missing", sim_missing, "Per-cell missing rate (cohort)");
  sim->add_option("--seed", sim_seed);
  sim->add_option("--out", sim_out, "Output file")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a boosted tree model");
  std::string tr_data, tr_config, tr_out;
  double tr_test = 0.2, tr_threshold = 0.5;
  std::uint64_t tr_seed = 7;
  bool tr_baseline = false;
  train->add_option("--data", tr_data, "Cohort CSV")->required();
  train->add_option("--config", tr_config, "Training config (JSON)");
  train->add_option("--out", tr_out, "Model file")->required();
  train->add_option("--test-fraction", tr_test)->check(CLI::Range(0.0, 0.9));
  train->add_option("--threshold", tr_threshold)->check(CLI::Range(0.0, 1.0));
  train->add_option("--seed", tr_seed);
  train->add_flag("--baseline", tr_baseline, "Also fit the logistic baseline");

  // gridsearch
  auto* grid = app.add_subcommand("gridsearch", "Cross-validated grid search");
  std::string gs_data, gs_grid, gs_out;
  int gs_folds = 5;
  std::uint64_t gs_seed = 7;
  bool gs_backward = false;
  std::size_t gs_min_features = 1;
  grid->add_option("--data", gs_data, "Cohort CSV")->required();
  grid->add_option("--grid", gs_grid, "Array of configs (JSON); default grid otherwise");
  grid->add_option("--folds", gs_folds)->check(CLI::Range(2, 100));
  grid->add_option("--seed", gs_seed);
  grid->add_option("--out", gs_out, "Best config (JSON)");
  grid->add_flag("--backward-elimination", gs_backward, "Then eliminate features with the best config");
  grid->add_option("--min-features", gs_min_features)->check(CLI::PositiveNumber);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Metrics of a model on a cohort");
  std::string ev_model, ev_data;
  double ev_threshold = 0.5;
  eval->add_option("--model", ev_model)->required();
  eval->add_option("--data", ev_data)->required();
  eval->add_option("--threshold", ev_threshold)->check(CLI::Range(0.0, 1.0));

  // explain
  auto* expl = app.add_subcommand("explain", "Explanation payload for one case");
  std::string ex_model, ex_case;
  expl->add_option("--model", ex_model)->required();
  expl->add_option("--case", ex_case, "Case document (JSON)")->required();

  // summary-shap
  auto* sshap = app.add_subcommand("summary-shap", "Global SHAP summary over a cohort");
  std::string ss_model, ss_data, ss_out;
  sshap->add_option("--model", ss_model)->required();
  sshap->add_option("--data", ss_data)->required();
  sshap->add_option("--out", ss_out, "Scatter rows (TSV)")->required();

  // pd
  auto* pd = app.add_subcommand("pd", "Partial dependence curve");
  std::string pd_model, pd_data, pd_feature, pd_out;
  std::size_t pd_points = 20;
  pd->add_option("--model", pd_model)->required();
  pd->add_option("--data", pd_data)->required();
  pd->add_option("--feature", pd_feature)->required();
  pd->add_option("--points", pd_points)->check(CLI::Range(2, 1000));
  pd->add_option("--out", pd_out, "Curve rows (TSV)")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the REST service");
  std::string sv_manifest, sv_store, sv_host = "0.0.0.0", sv_salt;
  int sv_port = 8080;
  serve->add_option("--manifest", sv_manifest, "Registry manifest")->required();
  serve->add_option("--store", sv_store, "Store directory (default $TRIAD_STORE_DIR or ./store)");
  serve->add_option("--host", sv_host);
  serve->add_option("--port", sv_port)->check(CLI::Range(1, 65535));
  serve->add_option("--salt", sv_salt, "Salt of the setting assignment");

  // analyze-survey
  auto* an = app.add_subcommand("analyze-survey", "Score summaries and dependency graph");
  std::string an_scores, an_out;
  double an_threshold = 0.03;
  an->add_option("--scores", an_scores, "Store log or survey records (JSONL)")->required();
  an->add_option("--out", an_out, "Report directory")->required();
  an->add_option("--threshold", an_threshold)->check(CLI::NonNegativeNumber);

  // migrate-store
  auto* mig = app.add_subcommand("migrate-store", "Replay a store and rewrite it with contiguous sequence numbers");
  std::string mg_from, mg_to;
  mig->add_option("--from", mg_from, "Source store directory")->required();
  mig->add_option("--to", mg_to, "Target store directory")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kUsage;
  }

  detail::Reporter rep{report_path, out};
  json report;
  try {
    if (*sim) {
      report = {{"command", "simulate"}, {"kind", sim_kind}, {"n", sim_n}, {"seed", sim_seed}, {"out", sim_out}};
      if (sim_kind == "cohort") {
        const auto ds = simulate_cohort({.n = sim_n, .positive_rate = sim_rate, .missing_rate = sim_missing}, sim_seed);
        detail::write_text(sim_out, cohort_to_string(ds));
        long pos = 0;
        for (int y : ds.labels) pos += y;
        report["positives"] = pos;
        report["digest"] = learn::dataset_digest(ds);
      } else {
        std::string text;
        for (const auto& r : survey::planted_survey(static_cast<std::size_t>(sim_n), sim_seed))
          text += detail::to_json(r).dump() + "\n";
        detail::write_text(sim_out, text);
      }
    } else if (*train) {
      const auto data = detail::read_cohort(tr_data);
      const auto config = tr_config.empty() ? learn::TrainConfig{} : learn::train_config_from_json(detail::read_json(tr_config));
      const auto split = learn::stratified_split(data, tr_test, tr_seed);
      const auto model = learn::train_gbdt(split.train, config);
      learn::save_model(model, tr_out);
      report = {{"command", "train"},
                {"model", tr_out},
                {"config", learn::to_json(config)},
                {"seed", tr_seed},
                {"train_rows", split.train.size()},
                {"test_rows", split.test.size()},
                {"trees", model.trees.size()},
                {"train", detail::score(model, split.train, tr_threshold)}};
      if (split.test.size() > 0) report["test"] = detail::score(model, split.test, tr_threshold);
      if (tr_baseline) {
        const auto lr = learn::train_logistic(split.train);
        const auto& eval_on = split.test.size() > 0 ? split.test : split.train;
        const auto p = learn::predict_all(lr, eval_on);
        report["baseline"] = detail::metrics_json(learn::evaluate_scores(p, eval_on.labels, tr_threshold),
                                                  learn::log_loss(p, eval_on.labels));
      }
    } else if (*grid) {
      const auto data = detail::read_cohort(gs_data);
      const auto configs = gs_grid.empty() ? learn::default_grid() : detail::read_grid(gs_grid);
      const auto res = learn::grid_search(data, configs, gs_folds, gs_seed);
      json table = json::array();
      for (const auto& row : res.table)
        table.push_back({{"config", learn::to_json(row.config)},
                         {"mean_auc", row.mean_auc},
                         {"std_auc", row.std_auc},
                         {"fold_auc", row.fold_auc}});
      report = {{"command", "gridsearch"},
                {"folds", gs_folds},
                {"seed", gs_seed},
                {"best_index", res.best_index},
                {"best", learn::to_json(res.best)},
                {"table", table}};
      if (gs_backward) {
        json steps = json::array();
        for (const auto& s : learn::backward_elimination(data, res.best, gs_folds, gs_seed, gs_min_features))
          steps.push_back({{"features", s.features},
                           {"mean_auc", s.mean_auc},
                           {"removed", s.removed.empty() ? json(nullptr) : json(s.removed)}});
        report["backward_elimination"] = steps;
      }
      if (!gs_out.empty()) detail::write_text(gs_out, learn::to_json(res.best).dump(2) + "\n");
    } else if (*eval) {
      const auto model = learn::load_model(ev_model);
      report = {{"command", "evaluate"}, {"model", ev_model}, {"data", ev_data},
                {"metrics", detail::score(model, detail::read_cohort(ev_data), ev_threshold)}};
    } else if (*expl) {
      const auto model = learn::load_model(ex_model);
      const auto c = case_from_json(detail::read_json(ex_case));
      out << explain::to_json(explain::explain_case(model, learn::align(model.schema, c.features))).dump(2) << '\n';
      rep.stdout_taken = true;
      report = {{"command", "explain"}, {"model", ex_model}, {"case_id", c.case_id}};
    } else if (*sshap) {
      const auto model = learn::load_model(ss_model);
      const auto data = detail::read_cohort(ss_data);
      const auto s = explain::global_summary(model, data);
      std::ostringstream tsv;
      explain::write_summary_tsv(tsv, s);
      detail::write_text(ss_out, tsv.str());
      report = explain::to_json(s);
      report["command"] = "summary-shap";
      report["out"] = ss_out;
      report["rows"] = data.size();
    } else if (*pd) {
      const auto model = learn::load_model(pd_model);
      const auto data = detail::read_cohort(pd_data);
      const auto c = explain::partial_dependence(model, pd_feature, explain::default_pd_grid(data, pd_feature, pd_points), data);
      std::ostringstream tsv;
      explain::write_pd_tsv(tsv, c);
      detail::write_text(pd_out, tsv.str());
      report = {{"command", "pd"}, {"feature", pd_feature}, {"grid", c.grid}, {"pd", c.pd}, {"out", pd_out}};
    } else if (*serve) {
      if (sv_store.empty()) {
        const char* env = std::getenv("TRIAD_STORE_DIR");
        sv_store = env && *env ? env : "store";
      }
      auto registry = std::make_shared<hosting::RegistryHolder>();
      registry->load(sv_manifest);
      auto store = std::make_shared<hosting::Store>(fs::path(sv_store));
      hosting::Service service(registry, store, {.setting_salt = sv_salt});
      httplib::Server server;
      hosting::bind(server, service);
      err << "serving on " << sv_host << ":" << sv_port << " (store " << sv_store << ", "
          << registry->get()->size() << " registry entries)\n";
      if (!server.listen(sv_host, sv_port)) throw ConfigError("cannot listen on " + sv_host + ":" + std::to_string(sv_port));
      report = {{"command", "serve"}, {"port", sv_port}};
    } else if (*an) {
      const auto in = detail::read_survey(an_scores);
      const fs::path dir = an_out;
      report = {{"command", "analyze-survey"}, {"records", in.records.size()}, {"out", an_out}};
      auto rows = survey::summarize_scores(in.records, survey::Grouping::All);
      for (auto& r : survey::summarize_scores(in.records, survey::Grouping::BySetting)) rows.push_back(r);
      detail::write_text(dir / "summary.json", survey::to_json(rows).dump(2) + "\n");
      detail::write_text(dir / "summary.tsv", detail::summary_text(rows));
      const auto table = survey::normalize_table(in.records);
      const auto g = survey::fit_edge_regressions(survey::build_graph(table, an_threshold), table);
      detail::write_text(dir / "graph.json", survey::to_json(g).dump(2) + "\n");
      detail::write_text(dir / "graph.txt", survey::to_text(g));
      report["summary"] = survey::to_json(rows);
      report["edges"] = g.edges.size();
      if (!in.questionnaire.empty()) {
        const auto acc = survey::to_json(survey::acceptance_medians(in.questionnaire));
        detail::write_text(dir / "acceptance.json", acc.dump(2) + "\n");
        report["acceptance_rows"] = acc.size();
      }
    } else if (*mig) {
      const auto from = fs::path(mg_from) / hosting::Store::kLogName;
      if (!fs::exists(from)) throw DataError("no store log at " + from.string());
      const auto log = hosting::read_log(from);
      const auto st = hosting::replay(log);
      if (fs::exists(fs::path(mg_to) / hosting::Store::kLogName))
        throw DataError("target store " + mg_to + " already has a log");
      std::string text;
      std::uint64_t seq = 0;
      for (auto e : log) {
        e["seq"] = ++seq;
        text += e.dump() + "\n";
      }
      detail::write_text(fs::path(mg_to) / hosting::Store::kLogName, text);
      const auto check = hosting::replay(hosting::read_log(fs::path(mg_to) / hosting::Store::kLogName));
      report = {{"command", "migrate-store"},
                {"records", log.size()},
                {"cases", check.cases.size()},
                {"scores", check.scores.size()},
                {"questionnaire", check.questionnaire.size()},
                {"source_last_seq", st.last_seq}};
    }
    rep.emit(report);
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace triad::cli
