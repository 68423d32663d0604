#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "triad/domain/features.hpp"

namespace triad {

using json = nlohmann::json;

namespace detail {

inline std::optional<double> number_field(const json& obj, const std::string& name) {
  if (!obj.contains(name) || obj.at(name).is_null()) return std::nullopt;
  const auto& v = obj.at(name);
  if (!v.is_number()) throw InvalidField(name, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw InvalidField(name, "must be finite");
  return d;
}

inline TriState tristate_field(const json& obj, const std::string& name) {
  if (!obj.contains(name) || obj.at(name).is_null()) return TriState::Unknown;
  const auto& v = obj.at(name);
  try {
    if (v.is_boolean()) return v.get<bool>() ? TriState::Yes : TriState::No;
    if (v.is_string()) return parse_tristate(v.get<std::string>());
  } catch (const DomainError&) {
  }
  throw InvalidField(name, "expected yes, no or unknown");
}

}  // namespace detail

// {"sex":"M","age":55,"height":170,"weight":87,"waist":96,"mean_sbp":116,
//  "mean_dbp":68,"ah_therapy":"yes",...,"anamnesis":"..."}
inline RawPatient raw_from_json(const json& obj) {
  if (!obj.is_object()) throw InvalidField("raw", "expected an object");
  RawPatient r;
  if (obj.contains("sex") && !obj.at("sex").is_null()) {
    if (!obj.at("sex").is_string()) throw InvalidField("sex", "expected M or F");
    try {
      r.sex = parse_sex(obj.at("sex").get<std::string>());
    } catch (const DomainError&) {
      throw InvalidField("sex", "expected M or F");
    }
  }
  if (auto age = detail::number_field(obj, "age")) {
    if (*age != std::floor(*age) || *age < 0 || *age > 150) throw InvalidField("age", "expected whole years");
    r.age = static_cast<int>(*age);
  }
  r.height_cm = detail::number_field(obj, "height");
  r.weight_kg = detail::number_field(obj, "weight");
  r.waist_cm = detail::number_field(obj, "waist");
  r.mean_sbp = detail::number_field(obj, "mean_sbp");
  r.mean_dbp = detail::number_field(obj, "mean_dbp");
  if (r.height_cm && !(*r.height_cm > 0)) throw InvalidField("height", "must be positive");
  if (r.weight_kg && !(*r.weight_kg > 0)) throw InvalidField("weight", "must be positive");
  r.ah_therapy = detail::tristate_field(obj, "ah_therapy");
  r.physical_activity = detail::tristate_field(obj, "physical_activity");
  r.high_glucose_history = detail::tristate_field(obj, "high_glucose_history");
  r.dm_heredity = detail::tristate_field(obj, "dm_heredity");
  r.daily_vegetables = detail::tristate_field(obj, "daily_vegetables");
  if (obj.contains("anamnesis") && obj.at("anamnesis").is_string()) r.anamnesis = obj.at("anamnesis").get<std::string>();
  return r;
}

inline json to_json(const RawPatient& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"sex", std::string(to_string(r.sex))},
          {"age", r.age},
          {"height", opt(r.height_cm)},
          {"weight", opt(r.weight_kg)},
          {"waist", opt(r.waist_cm)},
          {"mean_sbp", opt(r.mean_sbp)},
          {"mean_dbp", opt(r.mean_dbp)},
          {"ah_therapy", std::string(to_string(r.ah_therapy))},
          {"physical_activity", std::string(to_string(r.physical_activity))},
          {"high_glucose_history", std::string(to_string(r.high_glucose_history))},
          {"dm_heredity", std::string(to_string(r.dm_heredity))},
          {"daily_vegetables", std::string(to_string(r.daily_vegetables))},
          {"anamnesis", r.anamnesis}};
}

// Explicit feature values over the default schema; unknown names and
// non-numeric values raise InvalidField naming the feature.
inline FeatureVector features_from_json(const json& obj, FeatureVector base = FeatureVector(default_schema())) {
  if (!obj.is_object()) throw InvalidField("features", "expected an object");
  for (const auto& [name, v] : obj.items()) {
    if (!base.contains(name)) throw InvalidField(name, "not in the feature schema");
    if (v.is_null()) {
      base.set_missing(name);
      continue;
    }
    base.set(name, detail::number_field(obj, name));
  }
  return base;
}

inline json to_json(const FeatureVector& fv) {
  json out = json::object();
  for (std::size_t i = 0; i < fv.size(); ++i) out[fv.names()[i]] = fv[i] ? json(*fv[i]) : json(nullptr);
  return out;
}

// Case document: {"case_id", "raw": {...}, "features": {...}?, "observed_outcome": 0|1?}.
// Features derive from raw height/weight when both are present; explicit
// "features" entries override derived ones.
inline PatientCase case_from_json(const json& doc, BsaFormula formula = BsaFormula::DuBois) {
  if (!doc.is_object()) throw InvalidField("case", "expected an object");
  PatientCase c;
  if (!doc.contains("case_id") || !doc.at("case_id").is_string() || doc.at("case_id").get<std::string>().empty())
    throw InvalidField("case_id", "expected a nonempty string");
  c.case_id = doc.at("case_id").get<std::string>();
  if (doc.contains("raw")) c.raw = raw_from_json(doc.at("raw"));
  if (c.raw.height_cm && c.raw.weight_kg) {
    c.features = derive_features(c.raw, formula);
  } else {
    c.features = FeatureVector(default_schema());
    if (doc.contains("raw") && doc.at("raw").contains("age")) c.features.set("age", static_cast<double>(c.raw.age));
    c.features.set("weight", c.raw.weight_kg);
    c.features.set("mean_sbp", c.raw.mean_sbp);
    c.features.set("mean_dbp", c.raw.mean_dbp);
  }
  if (doc.contains("features")) c.features = features_from_json(doc.at("features"), std::move(c.features));
  if (doc.contains("observed_outcome") && !doc.at("observed_outcome").is_null()) {
    const auto& o = doc.at("observed_outcome");
    if (!o.is_number_integer() || (o.get<int>() != 0 && o.get<int>() != 1))
      throw InvalidField("observed_outcome", "expected 0 or 1");
    c.observed_outcome = o.get<int>();
  }
  return c;
}

inline json to_json(const PatientCase& c) {
  json out = {{"case_id", c.case_id}, {"raw", to_json(c.raw)}, {"features", to_json(c.features)}};
  out["observed_outcome"] = c.observed_outcome ? json(*c.observed_outcome) : json(nullptr);
  return out;
}

}  // namespace triad
