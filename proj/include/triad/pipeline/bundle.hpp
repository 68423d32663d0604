#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triad/explain/report.hpp"
#include "triad/pipeline/registry.hpp"
#include "triad/pipeline/setting.hpp"

namespace triad::pipeline {

using json = nlohmann::json;

// A: stage 2 only. B: stages 1 and 2. C: all three.
inline bool shows(Setting s, Stage stage) {
  switch (s) {
    case Setting::A: return stage == Stage::Predictor;
    case Setting::B: return stage != Stage::Explainer;
    case Setting::C: return true;
  }
  return true;
}

struct ScaleOutput {
  std::string entry_id;
  std::string name;
  std::string horizon;
  scales::ScaleResult result;
  bool operator==(const ScaleOutput&) const = default;
};

struct RiskOutput {
  std::string entry_id;
  std::string name;
  std::string horizon;
  double margin = 0.0;
  double probability = 0.0;
  std::string category;
  bool operator==(const RiskOutput&) const = default;
};

struct ExplanationOutput {
  std::string entry_id;
  std::string parent;
  json explanation;  // explanation payload of the parent's prediction
  bool operator==(const ExplanationOutput&) const = default;
};

struct Skip {
  std::string entry_id;
  Stage stage = Stage::Predictor;
  std::string reason;
  bool operator==(const Skip&) const = default;
};

struct DecisionBundle {
  std::string case_id;
  std::vector<ScaleOutput> stage1;
  std::vector<RiskOutput> stage2;
  std::vector<ExplanationOutput> stage3;
  std::vector<Skip> skipped;
  std::string produced_at;
  bool operator==(const DecisionBundle&) const = default;
};

struct BundleView {
  std::string case_id;
  Setting setting = Setting::C;
  std::string produced_at;
  std::optional<std::vector<ScaleOutput>> stage1;
  std::optional<std::vector<RiskOutput>> stage2;
  std::optional<std::vector<ExplanationOutput>> stage3;
  std::vector<Skip> skipped;  // only entries of visible stages
  bool operator==(const BundleView&) const = default;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

// The case's values in a model's schema order.
inline std::vector<Value> model_row(const learn::TreeEnsemble& model, const PatientCase& c) {
  std::vector<Value> row;
  row.reserve(model.schema.size());
  for (const auto& name : model.schema) row.push_back(resolve_field(c, name));
  return row;
}

}  // namespace detail

// Applies stage 1, then stage 2, then stage 3 on each stage-2 output. A
// failing entry is recorded in `skipped`; the run itself never throws.
inline DecisionBundle run_pipeline(const Registry& registry, const PatientCase& c,
                                   std::string produced_at = utc_timestamp()) {
  DecisionBundle b;
  b.case_id = c.case_id;
  b.produced_at = std::move(produced_at);
  const auto& entries = registry.entries();

  auto guarded = [&](const ModelEntry& e, auto&& body) {
    const auto gate = applicable(e, c);
    if (!gate.ok) {
      b.skipped.push_back({e.entry_id, e.stage, gate.reason});
      return;
    }
    try {
      body();
    } catch (const std::exception& ex) {
      b.skipped.push_back({e.entry_id, e.stage, std::string("error: ") + ex.what()});
    }
  };

  for (const auto& e : entries) {
    if (e.stage != Stage::Scale) continue;
    guarded(e, [&] {
      b.stage1.push_back({e.entry_id, e.metadata.name, e.metadata.horizon, scales::evaluate_scale(*e.scale, c)});
    });
  }
  for (const auto& e : entries) {
    if (e.stage != Stage::Predictor) continue;
    guarded(e, [&] {
      const auto row = detail::model_row(*e.model, c);
      const double margin = learn::predict_margin(*e.model, row);
      const double p = learn::sigmoid(margin);
      b.stage2.push_back({e.entry_id, e.metadata.name, e.metadata.horizon, margin, p,
                          std::string(scales::to_string(scales::categorize_risk(p, e.thresholds)))});
    });
  }
  for (const auto& e : entries) {
    if (e.stage != Stage::Explainer) continue;
    const bool parent_ok = std::any_of(b.stage2.begin(), b.stage2.end(),
                                       [&](const RiskOutput& r) { return r.entry_id == e.parent; });
    if (!parent_ok) {
      b.skipped.push_back({e.entry_id, e.stage, "parent produced no output: " + e.parent});
      continue;
    }
    guarded(e, [&] {
      const auto& model = *registry.find(e.parent)->model;
      b.stage3.push_back(
          {e.entry_id, e.parent, explain::to_json(explain::explain_case(model, detail::model_row(model, c)))});
    });
  }
  return b;
}

inline BundleView render_setting(const DecisionBundle& b, Setting s) {
  BundleView v;
  v.case_id = b.case_id;
  v.setting = s;
  v.produced_at = b.produced_at;
  if (shows(s, Stage::Scale)) v.stage1 = b.stage1;
  if (shows(s, Stage::Predictor)) v.stage2 = b.stage2;
  if (shows(s, Stage::Explainer)) v.stage3 = b.stage3;
  for (const auto& k : b.skipped)
    if (shows(s, k.stage)) v.skipped.push_back(k);
  return v;
}

inline std::vector<std::string> sections(const BundleView& v) {
  std::vector<std::string> out;
  if (v.stage1) out.push_back("stage1");
  if (v.stage2) out.push_back("stage2");
  if (v.stage3) out.push_back("stage3");
  return out;
}

// Deterministic, near-uniform setting for a (case, reviewer) pair.
inline Setting assign_setting(std::string_view case_id, std::string_view reviewer_id, std::string_view salt = "") {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    h ^= 0x1f;
    h *= 1099511628211ULL;
  };
  mix(case_id);
  mix(reviewer_id);
  mix(salt);
  // splitmix64 finalizer
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return static_cast<Setting>(h % 3);
}

// ---- JSON ----

inline json to_json(const ScaleOutput& o) {
  return {{"entry_id", o.entry_id}, {"name", o.name}, {"horizon", o.horizon}, {"result", scales::to_json(o.result)}};
}

inline json to_json(const RiskOutput& o) {
  return {{"entry_id", o.entry_id}, {"name", o.name},         {"horizon", o.horizon},
          {"margin", o.margin},     {"probability", o.probability}, {"category", o.category}};
}

inline json to_json(const ExplanationOutput& o) {
  return {{"entry_id", o.entry_id}, {"parent", o.parent}, {"explanation", o.explanation}};
}

inline json to_json(const Skip& k) {
  return {{"entry_id", k.entry_id}, {"stage", stage_number(k.stage)}, {"reason", k.reason}};
}

template <class T>
json to_json_list(const std::vector<T>& xs) {
  json out = json::array();
  for (const auto& x : xs) out.push_back(to_json(x));
  return out;
}

inline json to_json(const DecisionBundle& b) {
  return {{"case_id", b.case_id},           {"produced_at", b.produced_at},
          {"stage1", to_json_list(b.stage1)}, {"stage2", to_json_list(b.stage2)},
          {"stage3", to_json_list(b.stage3)}, {"skipped", to_json_list(b.skipped)}};
}

inline json to_json(const BundleView& v) {
  json out = {{"case_id", v.case_id}, {"setting", std::string(to_string(v.setting))}, {"produced_at", v.produced_at}};
  if (v.stage1) out["stage1"] = to_json_list(*v.stage1);
  if (v.stage2) out["stage2"] = to_json_list(*v.stage2);
  if (v.stage3) out["stage3"] = to_json_list(*v.stage3);
  out["skipped"] = to_json_list(v.skipped);
  return out;
}

inline scales::ScaleResult scale_result_from_json(const json& j) {
  scales::ScaleResult r;
  r.scale_id = j.at("scale_id").get<std::string>();
  r.total_points = j.at("total_points").get<int>();
  r.probability = j.at("probability").get<double>();
  r.horizon_years = j.at("horizon_years").get<double>();
  r.category = j.at("category").get<std::string>();
  // Items come back in key order.
  for (const auto& [id, pts] : j.at("per_item_points").items()) r.per_item_points.emplace_back(id, pts.get<int>());
  return r;
}

inline DecisionBundle bundle_from_json(const json& j) {
  try {
    DecisionBundle b;
    b.case_id = j.at("case_id").get<std::string>();
    b.produced_at = j.at("produced_at").get<std::string>();
    for (const auto& o : j.at("stage1"))
      b.stage1.push_back({o.at("entry_id").get<std::string>(), o.at("name").get<std::string>(),
                          o.at("horizon").get<std::string>(), scale_result_from_json(o.at("result"))});
    for (const auto& o : j.at("stage2"))
      b.stage2.push_back({o.at("entry_id").get<std::string>(), o.at("name").get<std::string>(),
                          o.at("horizon").get<std::string>(), o.at("margin").get<double>(),
                          o.at("probability").get<double>(), o.at("category").get<std::string>()});
    for (const auto& o : j.at("stage3"))
      b.stage3.push_back({o.at("entry_id").get<std::string>(), o.at("parent").get<std::string>(), o.at("explanation")});
    for (const auto& o : j.at("skipped"))
      b.skipped.push_back({o.at("entry_id").get<std::string>(), parse_stage(o.at("stage").get<int>()),
                           o.at("reason").get<std::string>()});
    return b;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bundle: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bundle: ") + e.what());
  }
}

}  // namespace triad::pipeline
