#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triad/survey/records.hpp"

namespace triad::survey {

using json = nlohmann::json;

struct MeanCi {
  std::size_t n = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// mean ± 1.96·s/√n with the sample standard deviation.
inline MeanCi mean_ci(std::span<const double> xs, const std::string& group = "") {
  if (xs.size() < 2) throw InsufficientData(group.empty() ? "need at least 2 values" : group);
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double half = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return {xs.size(), mean, mean - half, mean + half};
}

// "3.93 (3.84, 4.02)"
inline std::string format_ci(const MeanCi& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f (%.2f, %.2f)", m.mean, m.ci_low, m.ci_high);
  return buf;
}

enum class Grouping { All, BySetting };

struct ScoreSummary {
  std::string group;
  MeanCi agree, understand, use;
};

inline std::vector<ScoreSummary> summarize_scores(const std::vector<SurveyRecord>& records, Grouping grouping) {
  auto summarize = [](const std::string& label, const std::vector<const SurveyRecord*>& rs) {
    std::vector<double> a, u, s;
    for (const auto* r : rs) {
      a.push_back(r->agree);
      u.push_back(r->understand);
      s.push_back(r->use);
    }
    return ScoreSummary{label, mean_ci(a, label), mean_ci(u, label), mean_ci(s, label)};
  };
  std::vector<const SurveyRecord*> all;
  for (const auto& r : records) all.push_back(&r);
  std::vector<ScoreSummary> out;
  if (grouping == Grouping::All) {
    out.push_back(summarize("All settings", all));
    return out;
  }
  for (auto s : {Setting::A, Setting::B, Setting::C}) {
    std::vector<const SurveyRecord*> group;
    for (const auto* r : all)
      if (r->setting == s) group.push_back(r);
    out.push_back(summarize("Setting " + std::string(pipeline::to_string(s)), group));
  }
  return out;
}

inline json to_json(const MeanCi& m) {
  return {{"n", m.n}, {"mean", m.mean}, {"ci_low", m.ci_low}, {"ci_high", m.ci_high}, {"text", format_ci(m)}};
}

inline json to_json(const std::vector<ScoreSummary>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"group", r.group},
                   {"agree", to_json(r.agree)},
                   {"understand", to_json(r.understand)},
                   {"use", to_json(r.use)}});
  return out;
}

// ---- acceptance questionnaire ----

struct QuestionnaireResponse {
  std::string respondent_id;
  std::string criterion;  // e.g. BI, IM, PEOU, PU
  std::string item;       // e.g. BI1
  int value = 3;          // 1..5
  bool operator==(const QuestionnaireResponse&) const = default;
};

struct AcceptanceRow {
  std::string criterion;
  std::string item;  // empty on the criterion row
  std::size_t n = 0;
  int median = 0;
  int max = 0;
  int min = 0;
};

// Lower median for even counts.
inline int lower_median(std::vector<int> v) {
  if (v.empty()) throw InsufficientData("median of no values");
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

// One row per criterion over its pooled item responses, followed by its
// item rows. Criteria and items keep first-appearance order.
inline std::vector<AcceptanceRow> acceptance_medians(const std::vector<QuestionnaireResponse>& responses) {
  if (responses.empty()) throw InsufficientData("no questionnaire responses");
  std::vector<std::string> criteria;
  std::map<std::string, std::vector<std::string>> items;
  std::map<std::pair<std::string, std::string>, std::vector<int>> values;
  for (const auto& r : responses) {
    if (r.value < 1 || r.value > 5) throw DomainError(r.item + " = " + std::to_string(r.value) + " is outside 1..5");
    if (std::find(criteria.begin(), criteria.end(), r.criterion) == criteria.end()) criteria.push_back(r.criterion);
    auto& its = items[r.criterion];
    if (std::find(its.begin(), its.end(), r.item) == its.end()) its.push_back(r.item);
    values[{r.criterion, r.item}].push_back(r.value);
  }
  auto row = [](const std::string& c, const std::string& i, const std::vector<int>& v) {
    return AcceptanceRow{c, i, v.size(), lower_median(v), *std::max_element(v.begin(), v.end()),
                         *std::min_element(v.begin(), v.end())};
  };
  std::vector<AcceptanceRow> out;
  for (const auto& c : criteria) {
    std::vector<int> pooled;
    for (const auto& i : items[c]) {
      const auto& v = values[{c, i}];
      pooled.insert(pooled.end(), v.begin(), v.end());
    }
    out.push_back(row(c, "", pooled));
    for (const auto& i : items[c]) out.push_back(row(c, i, values[{c, i}]));
  }
  return out;
}

inline json to_json(const std::vector<AcceptanceRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"criterion", r.criterion},
                   {"item", r.item.empty() ? json(nullptr) : json(r.item)},
                   {"n", r.n},
                   {"median", r.median},
                   {"max", r.max},
                   {"min", r.min}});
  return out;
}

}  // namespace triad::survey
