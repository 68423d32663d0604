#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triad/hosting/store.hpp"
#include "triad/pipeline/manifest.hpp"
#include "triad/survey/survey.hpp"

namespace triad::hosting {

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> headers;  // lower-case names
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  json body;
};

// Current registry snapshot; reload swaps it whole.
class RegistryHolder {
 public:
  std::shared_ptr<const pipeline::Registry> get() const {
    std::lock_guard lock(mu_);
    return current_;
  }

  void set(pipeline::Registry r) {
    auto next = std::make_shared<const pipeline::Registry>(std::move(r));
    std::lock_guard lock(mu_);
    current_ = std::move(next);
  }

  void load(const std::filesystem::path& manifest) { set(pipeline::load_manifest(manifest)); }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const pipeline::Registry> current_;
};

struct ServiceOptions {
  std::string setting_salt;
  double graph_threshold = 0.03;
};

namespace detail {

inline Response error(int status, const std::string& message) { return {status, {{"error", message}}}; }

inline Response invalid(const InvalidField& e) {
  return {422, {{"error", e.what()}, {"fields", json::array({e.field()})}}};
}

inline std::optional<std::string> header(const Request& r, const std::string& name) {
  auto it = r.headers.find(name);
  if (it == r.headers.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

inline std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : path) {
    if (ch == '/') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

// Survey records from stored scores. The scale risk is the first stage-1
// result's category under default thresholds, the model risk the first
// stage-2 category; Low when the bundle has no such output.
inline std::vector<survey::SurveyRecord> survey_records(const StoreState& st) {
  std::vector<survey::SurveyRecord> out;
  for (const auto& s : st.scores) {
    survey::SurveyRecord r;
    r.setting = s.setting;
    r.agree = s.agree;
    r.understand = s.understand;
    r.use = s.use;
    const auto& b = st.cases.at(s.case_id).bundle;
    if (!b.stage1.empty()) r.findrisk_risk = scales::categorize_risk(b.stage1.front().result.probability);
    if (!b.stage2.empty()) r.model_risk = scales::parse_risk_category(b.stage2.front().category);
    out.push_back(r);
  }
  return out;
}

// Request handling independent of any HTTP library.
class Service {
 public:
  Service(std::shared_ptr<RegistryHolder> registry, std::shared_ptr<Store> store, ServiceOptions opts = {})
      : registry_(std::move(registry)), store_(std::move(store)), opts_(std::move(opts)) {}

  RegistryHolder& registry() { return *registry_; }
  Store& store() { return *store_; }

  Response handle(const Request& req) const {
    try {
      return route(req);
    } catch (const InvalidField& e) {
      return detail::invalid(e);
    } catch (const std::exception& e) {
      return detail::error(500, e.what());
    }
  }

  Response health() const {
    const auto reg = registry_->get();
    const auto st = store_->snapshot();
    return {200,
            {{"status", "ok"},
             {"registry_loaded", reg != nullptr},
             {"entries", reg ? reg->size() : 0},
             {"cases", st->cases.size()},
             {"scores", st->scores.size()}}};
  }

  Response models() const {
    const auto reg = registry_->get();
    if (!reg) return detail::error(503, "registry not loaded");
    json out = json::array();
    for (const auto& e : reg->entries()) {
      json m = {{"entry_id", e.entry_id},
                {"stage", pipeline::stage_number(e.stage)},
                {"name", e.metadata.name},
                {"horizon", e.metadata.horizon},
                {"version", e.metadata.version},
                {"applicability", pipeline::to_json(e.applicability)}};
      if (e.stage == pipeline::Stage::Predictor) m["schema"] = e.model->schema;
      if (e.stage == pipeline::Stage::Explainer) m["parent"] = e.parent;
      out.push_back(std::move(m));
    }
    return {200, {{"models", out}}};
  }

  // Body: {"features": {...}, "raw": {...}?, "setting": "A"|"B"|"C"?, "case_id"?}
  Response predict(const std::string& body) const {
    const auto reg = registry_->get();
    if (!reg) return detail::error(503, "registry not loaded");
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      return detail::error(400, std::string("malformed body: ") + e.what());
    }
    if (!doc.is_object()) return detail::error(400, "body must be an object");
    Setting setting = Setting::C;
    if (doc.contains("setting")) {
      try {
        setting = pipeline::parse_setting(doc.at("setting").get<std::string>());
      } catch (const std::exception&) {
        throw InvalidField("setting", "expected A, B or C");
      }
    }
    if (!doc.contains("case_id")) doc["case_id"] = "predict";
    const auto c = case_from_json(doc);
    const auto bundle = pipeline::run_pipeline(*reg, c);
    return {200, pipeline::to_json(pipeline::render_setting(bundle, setting))};
  }

  // Body: case document. The bundle is computed now and kept with the case.
  Response create_case(const std::string& body) const {
    const auto reg = registry_->get();
    if (!reg) return detail::error(503, "registry not loaded");
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      return detail::error(400, std::string("malformed body: ") + e.what());
    }
    const auto c = case_from_json(doc);
    if (store_->snapshot()->find_case(c.case_id)) return detail::error(409, "case '" + c.case_id + "' already exists");
    const auto bundle = pipeline::run_pipeline(*reg, c);
    try {
      const auto seq = store_->add_case(c, bundle);
      return {201, {{"case_id", c.case_id}, {"seq", seq}, {"produced_at", bundle.produced_at}}};
    } catch (const DuplicateId& e) {
      return detail::error(409, e.what());
    }
  }

  Response case_view(const std::string& case_id, const std::optional<std::string>& reviewer) const {
    if (!reviewer) return detail::error(400, "missing X-Reviewer-Id header");
    const auto st = store_->snapshot();
    const auto* rec = st->find_case(case_id);
    if (!rec) return detail::error(404, "unknown case '" + case_id + "'");
    const auto setting = pipeline::assign_setting(case_id, *reviewer, opts_.setting_salt);
    return {200,
            {{"case_id", case_id},
             {"reviewer_id", *reviewer},
             {"characteristics", to_json(rec->patient.raw)},
             {"features", to_json(rec->patient.features)},
             {"anamnesis", rec->patient.raw.anamnesis},
             {"already_scored", st->has_score(case_id, *reviewer)},
             {"view", pipeline::to_json(pipeline::render_setting(rec->bundle, setting))}}};
  }

  // Body: {"agree": k, "understand": k, "use": k}
  Response submit_scores(const std::string& case_id, const std::optional<std::string>& reviewer,
                         const std::string& body) const {
    if (!reviewer) return detail::error(400, "missing X-Reviewer-Id header");
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      return detail::error(400, std::string("malformed body: ") + e.what());
    }
    if (!doc.is_object()) return detail::error(400, "body must be an object");
    const auto st = store_->snapshot();
    if (!st->find_case(case_id)) return detail::error(404, "unknown case '" + case_id + "'");
    std::vector<std::string> bad;
    for (const char* k : {"agree", "understand", "use"}) {
      const bool ok = doc.contains(k) && doc.at(k).is_number_integer() && doc.at(k).get<int>() >= 1 &&
                      doc.at(k).get<int>() <= 5;
      if (!ok) bad.push_back(k);
    }
    if (!bad.empty()) return {422, {{"error", "scores must be integers in 1..5"}, {"fields", bad}}};
    ScoreRecord s;
    s.case_id = case_id;
    s.reviewer_id = *reviewer;
    s.setting = pipeline::assign_setting(case_id, *reviewer, opts_.setting_salt);
    s.agree = doc.at("agree").get<int>();
    s.understand = doc.at("understand").get<int>();
    s.use = doc.at("use").get<int>();
    s.submitted_at = pipeline::utc_timestamp();
    try {
      const auto seq = store_->add_score(s);
      return {201, {{"case_id", case_id}, {"reviewer_id", *reviewer}, {"seq", seq}}};
    } catch (const DuplicateId& e) {
      return detail::error(409, e.what());
    }
  }

  // Body: {"respondent_id": "...", "responses": [{"criterion","item","value"}]}
  Response submit_questionnaire(const std::string& body) const {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      return detail::error(400, std::string("malformed body: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("respondent_id") || !doc.at("respondent_id").is_string() ||
        !doc.contains("responses") || !doc.at("responses").is_array())
      return detail::error(400, "expected respondent_id and responses[]");
    std::vector<survey::QuestionnaireResponse> rs;
    std::vector<std::string> bad;
    for (std::size_t i = 0; i < doc.at("responses").size(); ++i) {
      const auto& r = doc.at("responses")[i];
      const std::string where = "responses[" + std::to_string(i) + "]";
      if (!r.is_object() || !r.contains("criterion") || !r.at("criterion").is_string() || !r.contains("item") ||
          !r.at("item").is_string()) {
        bad.push_back(where);
        continue;
      }
      if (!r.contains("value") || !r.at("value").is_number_integer() || r.at("value").get<int>() < 1 ||
          r.at("value").get<int>() > 5) {
        bad.push_back(where + ".value");
        continue;
      }
      rs.push_back({doc.at("respondent_id").get<std::string>(), r.at("criterion").get<std::string>(),
                    r.at("item").get<std::string>(), r.at("value").get<int>()});
    }
    if (!bad.empty()) return {422, {{"error", "invalid responses"}, {"fields", bad}}};
    if (rs.empty()) return detail::error(400, "no responses");
    const auto seq = store_->add_questionnaire(rs);
    return {201, {{"respondent_id", doc.at("respondent_id")}, {"count", rs.size()}, {"seq", seq}}};
  }

  // grouping: "all", "by_setting" or "both" (default).
  Response analytics_summary(const std::string& grouping) const {
    const auto records = survey_records(*store_->snapshot());
    json rows = json::array();
    try {
      if (grouping == "all" || grouping == "both" || grouping.empty())
        for (auto& r : survey::to_json(survey::summarize_scores(records, survey::Grouping::All))) rows.push_back(r);
      else if (grouping != "by_setting")
        return detail::error(400, "grouping must be all, by_setting or both");
      if (grouping == "by_setting" || grouping == "both" || grouping.empty())
        for (auto& r : survey::to_json(survey::summarize_scores(records, survey::Grouping::BySetting)))
          rows.push_back(r);
    } catch (const InsufficientData& e) {
      return detail::error(409, e.what());
    }
    return {200, {{"n", records.size()}, {"rows", rows}}};
  }

  Response analytics_graph(std::optional<double> threshold) const {
    const auto records = survey_records(*store_->snapshot());
    if (records.size() < 2) return detail::error(409, "InsufficientData: need at least 2 score records");
    try {
      const auto table = survey::normalize_table(records);
      const auto g = survey::fit_edge_regressions(
          survey::build_graph(table, threshold.value_or(opts_.graph_threshold)), table);
      auto out = survey::to_json(g);
      out["n"] = records.size();
      out["text"] = survey::to_text(g);
      return {200, out};
    } catch (const InsufficientData& e) {
      return detail::error(409, e.what());
    } catch (const RankDeficient& e) {
      return detail::error(409, e.what());
    }
  }

  Response analytics_acceptance() const {
    const auto st = store_->snapshot();
    try {
      const auto rows = survey::acceptance_medians(st->questionnaire);
      return {200, {{"n", st->questionnaire.size()}, {"rows", survey::to_json(rows)}}};
    } catch (const InsufficientData& e) {
      return detail::error(409, e.what());
    }
  }

 private:
  Response route(const Request& req) const {
    const auto parts = detail::split_path(req.path);
    const auto& m = req.method;
    auto query = [&](const std::string& k) -> std::string {
      auto it = req.query.find(k);
      return it == req.query.end() ? "" : it->second;
    };
    if (parts.size() == 1 && parts[0] == "health" && m == "GET") return health();
    if (parts.size() == 1 && parts[0] == "models" && m == "GET") return models();
    if (parts.size() == 1 && parts[0] == "predict" && m == "POST") return predict(req.body);
    if (parts.size() == 1 && parts[0] == "cases" && m == "POST") return create_case(req.body);
    if (parts.size() == 1 && parts[0] == "questionnaire" && m == "POST") return submit_questionnaire(req.body);
    if (parts.size() == 3 && parts[0] == "cases" && parts[2] == "view" && m == "GET")
      return case_view(parts[1], detail::header(req, "x-reviewer-id"));
    if (parts.size() == 3 && parts[0] == "cases" && parts[2] == "scores" && m == "POST")
      return submit_scores(parts[1], detail::header(req, "x-reviewer-id"), req.body);
    if (parts.size() == 2 && parts[0] == "analytics" && m == "GET") {
      if (parts[1] == "summary") return analytics_summary(query("grouping"));
      if (parts[1] == "acceptance") return analytics_acceptance();
      if (parts[1] == "graph") {
        const auto t = query("threshold");
        if (t.empty()) return analytics_graph(std::nullopt);
        try {
          std::size_t used = 0;
          const double v = std::stod(t, &used);
          if (used != t.size() || !(v >= 0)) throw std::invalid_argument(t);
          return analytics_graph(v);
        } catch (const std::exception&) {
          return detail::error(400, "threshold must be a nonnegative number");
        }
      }
    }
    return detail::error(404, "no route for " + m + " " + req.path);
  }

  std::shared_ptr<RegistryHolder> registry_;
  std::shared_ptr<Store> store_;
  ServiceOptions opts_;
};

}  // namespace triad::hosting
