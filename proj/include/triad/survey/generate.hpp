#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "triad/survey/records.hpp"
#include "triad/survey/summary.hpp"

namespace triad::survey {

namespace detail {

inline int clamp_likert(int k) { return std::clamp(k, 1, 5); }

inline RiskCategory random_category(std::mt19937_64& rng) {
  return static_cast<RiskCategory>(std::uniform_int_distribution<int>(0, 2)(rng));
}

}  // namespace detail

// Records with a planted chain explanation_present -> agree -> understand
// -> use. Settings are drawn uniformly, risks independently.
inline std::vector<SurveyRecord> planted_survey(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> setting(0, 2), likert(1, 5), step(-1, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SurveyRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SurveyRecord r;
    r.setting = static_cast<Setting>(setting(rng));
    r.findrisk_risk = detail::random_category(rng);
    r.model_risk = detail::random_category(rng);
    r.agree = detail::clamp_likert((r.explanation_present() ? 4 : 2) + step(rng));
    r.understand = unit(rng) < 0.6 ? r.agree : likert(rng);
    r.use = unit(rng) < 0.6 ? r.understand : likert(rng);
    out.push_back(r);
  }
  return out;
}

// Every column drawn independently, presence flags included.
inline AnalysisTable independent_table(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> likert(1, 5), cat(0, 2), bit(0, 1);
  AnalysisTable t;
  t.columns = table_columns();
  t.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (int k = 0; k < 3; ++k) row.push_back((likert(rng) - 1) / 4.0);
    for (int k = 0; k < 2; ++k) row.push_back(cat(rng) / 2.0);
    for (int k = 0; k < 2; ++k) row.push_back(static_cast<double>(bit(rng)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Acceptance responses per criterion with the given item counts. Values
// centre on `centre[c]` with a spread of ±1.
struct QuestionnaireCriterion {
  std::string criterion;
  int items = 3;
  int centre = 3;
};

inline std::vector<QuestionnaireResponse> simulate_questionnaire(const std::vector<QuestionnaireCriterion>& criteria,
                                                                 std::size_t respondents, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> offset({1, 3, 1});
  std::vector<QuestionnaireResponse> out;
  for (std::size_t r = 0; r < respondents; ++r)
    for (const auto& c : criteria)
      for (int i = 1; i <= c.items; ++i)
        out.push_back({"r" + std::to_string(r + 1), c.criterion, c.criterion + std::to_string(i),
                       detail::clamp_likert(c.centre + offset(rng) - 1)});
  return out;
}

}  // namespace triad::survey
