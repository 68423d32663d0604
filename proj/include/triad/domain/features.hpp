#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "triad/domain/types.hpp"

namespace triad {

enum class BsaFormula { DuBois, Mosteller };

inline BsaFormula parse_bsa_formula(std::string_view s) {
  if (s == "dubois" || s == "du_bois") return BsaFormula::DuBois;
  if (s == "mosteller") return BsaFormula::Mosteller;
  throw ConfigError("unknown BSA formula '" + std::string(s) + "'");
}

// Body surface area in m^2 from weight (kg) and height (cm).
inline double body_surface_area(double weight_kg, double height_cm, BsaFormula formula = BsaFormula::DuBois) {
  switch (formula) {
    case BsaFormula::DuBois:
      return 0.007184 * std::pow(weight_kg, 0.425) * std::pow(height_cm, 0.725);
    case BsaFormula::Mosteller:
      return std::sqrt(height_cm * weight_kg / 3600.0);
  }
  return 0.0;
}

inline double body_mass_index(double weight_kg, double height_cm) {
  const double m = height_cm / 100.0;
  return weight_kg / (m * m);
}

// Computes the six learner features. Blood pressures are copied through and
// stay missing when absent; height and weight are required.
inline FeatureVector derive_features(const RawPatient& raw, BsaFormula formula = BsaFormula::DuBois) {
  if (!raw.height_cm) throw MissingMeasurement("height");
  if (!raw.weight_kg) throw MissingMeasurement("weight");
  const double h = *raw.height_cm;
  const double w = *raw.weight_kg;
  if (!(h > 0.0)) throw DomainError("height must be positive");
  if (!(w > 0.0)) throw DomainError("weight must be positive");

  FeatureVector fv(default_schema());
  fv.set("bmi", body_mass_index(w, h));
  fv.set("mean_dbp", raw.mean_dbp);
  fv.set("age", static_cast<double>(raw.age));
  fv.set("mean_sbp", raw.mean_sbp);
  fv.set("weight", w);
  fv.set("bsa", body_surface_area(w, h, formula));
  return fv;
}

inline const std::vector<std::string>& raw_field_names() {
  static const std::vector<std::string> names{
      "sex", "age", "height", "weight", "waist", "mean_sbp", "mean_dbp", "ah_therapy",
      "physical_activity", "high_glucose_history", "dm_heredity", "daily_vegetables"};
  return names;
}

inline bool is_raw_field(std::string_view name) {
  const auto& n = raw_field_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

inline bool is_known_field(const PatientCase& c, std::string_view name) {
  return c.features.contains(name) || is_raw_field(name);
}

// Numeric view of a case field. Derived features take precedence over raw
// fields of the same name. Sex encodes as M=1, F=0; tri-states as no=0,
// yes=1, unknown=missing.
inline Value resolve_field(const PatientCase& c, std::string_view name) {
  if (c.features.contains(name)) return c.features.get(name);
  const RawPatient& r = c.raw;
  if (name == "sex") return r.sex == Sex::M ? 1.0 : 0.0;
  if (name == "age") return static_cast<double>(r.age);
  if (name == "height") return r.height_cm;
  if (name == "weight") return r.weight_kg;
  if (name == "waist") return r.waist_cm;
  if (name == "mean_sbp") return r.mean_sbp;
  if (name == "mean_dbp") return r.mean_dbp;
  if (name == "ah_therapy") return encode(r.ah_therapy);
  if (name == "physical_activity") return encode(r.physical_activity);
  if (name == "high_glucose_history") return encode(r.high_glucose_history);
  if (name == "dm_heredity") return encode(r.dm_heredity);
  if (name == "daily_vegetables") return encode(r.daily_vegetables);
  throw SchemaMismatch("unknown case field '" + std::string(name) + "'");
}

struct InclusionRule {
  std::string rule_id;
  std::function<bool(const PatientCase&)> accepts;
};

using InclusionCriteria = std::vector<InclusionRule>;

struct ValidationReport {
  bool accepted = true;
  std::vector<std::string> violations;
};

// Entry criteria checkable on the recorded fields: the age window and the
// absence of a prior hyperglycemia record. The observation-length criterion
// needs follow-up data that a case does not carry.
inline InclusionCriteria default_inclusion_criteria() {
  return {
      {"age_range", [](const PatientCase& c) { return c.raw.age >= 18 && c.raw.age <= 90; }},
      {"no_prior_hyperglycemia",
       [](const PatientCase& c) { return c.raw.high_glucose_history != TriState::Yes; }},
  };
}

inline ValidationReport validate_inclusion(const PatientCase& c,
                                           const InclusionCriteria& criteria = default_inclusion_criteria()) {
  ValidationReport report;
  for (const auto& rule : criteria) {
    if (!rule.accepts(c)) report.violations.push_back(rule.rule_id);
  }
  report.accepted = report.violations.empty();
  return report;
}

inline PatientCase make_case(std::string case_id, RawPatient raw, BsaFormula formula = BsaFormula::DuBois) {
  PatientCase c;
  c.case_id = std::move(case_id);
  c.features = derive_features(raw, formula);
  c.raw = std::move(raw);
  return c;
}

}  // namespace triad
