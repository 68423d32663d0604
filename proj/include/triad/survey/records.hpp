#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "triad/format.hpp"
#include "triad/pipeline/setting.hpp"
#include "triad/scales/scale.hpp"

namespace triad::survey {

using pipeline::Setting;
using scales::RiskCategory;

// One physician answer for one case, with the context that was shown.
struct SurveyRecord {
  Setting setting = Setting::C;
  int agree = 3;
  int understand = 3;
  int use = 3;
  RiskCategory findrisk_risk = RiskCategory::Low;
  RiskCategory model_risk = RiskCategory::Low;

  bool findrisk_present() const { return setting != Setting::A; }
  bool explanation_present() const { return setting == Setting::C; }
  bool operator==(const SurveyRecord&) const = default;
};

inline const std::array<std::string, 3>& scoring_variables() {
  static const std::array<std::string, 3> v{"agree", "understand", "use"};
  return v;
}

inline const std::array<std::string, 4>& context_variables() {
  static const std::array<std::string, 4> v{"findrisk_risk", "model_risk", "findrisk_present", "explanation_present"};
  return v;
}

// Every variable on [0, 1]: Likert k -> (k-1)/4, low/mid/hi -> 0/0.5/1,
// binary -> 0/1. Columns are scoring variables then context variables.
struct AnalysisTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t size() const { return rows.size(); }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
      if (columns[j] == name) return j;
    throw SchemaMismatch("no column '" + std::string(name) + "'");
  }

  std::vector<double> column(std::string_view name) const {
    const auto j = index_of(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[j]);
    return out;
  }
};

inline std::vector<std::string> table_columns() {
  std::vector<std::string> c(scoring_variables().begin(), scoring_variables().end());
  c.insert(c.end(), context_variables().begin(), context_variables().end());
  return c;
}

inline double normalize_likert(const std::string& variable, int k) {
  if (k < 1 || k > 5) throw DomainError(variable + " = " + std::to_string(k) + " is outside 1..5");
  return (k - 1) / 4.0;
}

inline double normalize_category(RiskCategory c) { return static_cast<int>(c) / 2.0; }

inline AnalysisTable normalize_table(const std::vector<SurveyRecord>& records) {
  AnalysisTable t;
  t.columns = table_columns();
  t.rows.reserve(records.size());
  for (const auto& r : records)
    t.rows.push_back({normalize_likert("agree", r.agree), normalize_likert("understand", r.understand),
                      normalize_likert("use", r.use), normalize_category(r.findrisk_risk),
                      normalize_category(r.model_risk), r.findrisk_present() ? 1.0 : 0.0,
                      r.explanation_present() ? 1.0 : 0.0});
  return t;
}

namespace detail {

inline int denormalize_likert(const std::string& variable, double v) {
  const double k = v * 4.0 + 1.0;
  if (!(k >= 1.0 && k <= 5.0) || k != std::round(k)) throw DomainError(variable + " = " + format_double(v) + " is not a scale point");
  return static_cast<int>(k);
}

inline RiskCategory denormalize_category(const std::string& variable, double v) {
  if (v == 0.0) return RiskCategory::Low;
  if (v == 0.5) return RiskCategory::Mid;
  if (v == 1.0) return RiskCategory::Hi;
  throw DomainError(variable + " = " + format_double(v) + " is not a category");
}

}  // namespace detail

inline std::vector<SurveyRecord> denormalize_table(const AnalysisTable& t) {
  std::vector<SurveyRecord> out;
  const auto a = t.index_of("agree"), u = t.index_of("understand"), s = t.index_of("use"),
             fr = t.index_of("findrisk_risk"), mr = t.index_of("model_risk"), fp = t.index_of("findrisk_present"),
             ep = t.index_of("explanation_present");
  for (const auto& row : t.rows) {
    SurveyRecord r;
    r.agree = detail::denormalize_likert("agree", row[a]);
    r.understand = detail::denormalize_likert("understand", row[u]);
    r.use = detail::denormalize_likert("use", row[s]);
    r.findrisk_risk = detail::denormalize_category("findrisk_risk", row[fr]);
    r.model_risk = detail::denormalize_category("model_risk", row[mr]);
    if (row[fp] == 0.0 && row[ep] == 0.0) r.setting = Setting::A;
    else if (row[fp] == 1.0 && row[ep] == 0.0) r.setting = Setting::B;
    else if (row[fp] == 1.0 && row[ep] == 1.0) r.setting = Setting::C;
    else throw DomainError("presence flags (" + format_double(row[fp]) + ", " + format_double(row[ep]) + ") match no setting");
    out.push_back(r);
  }
  return out;
}

}  // namespace triad::survey
