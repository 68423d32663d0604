#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triad/domain/types.hpp"
#include "triad/explain/shap.hpp"
#include "triad/format.hpp"
#include "triad/learn/tree.hpp"

namespace triad::explain {

using json = nlohmann::json;

struct Contribution {
  std::string feature;
  Value value;
  double phi = 0.0;
  std::string direction;  // "increases risk" or "decreases risk"
};

struct Explanation {
  Attribution attribution;
  double base_probability = 0.0;
  double probability = 0.0;
  // Non-zero contributions by |phi| descending, ties in schema order.
  std::vector<Contribution> contributions;
};

inline Explanation explain_case(const TreeEnsemble& model, std::span<const Value> row) {
  Explanation e;
  e.attribution = tree_shap(model, row);
  e.base_probability = learn::sigmoid(e.attribution.base_value);
  e.probability = learn::sigmoid(e.attribution.margin);
  std::vector<std::size_t> order(model.schema.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(e.attribution.phi[a]) > std::abs(e.attribution.phi[b]);
  });
  for (auto j : order) {
    const double phi = e.attribution.phi[j];
    if (phi == 0.0) continue;
    e.contributions.push_back({model.schema[j], row[j], phi, phi > 0.0 ? "increases risk" : "decreases risk"});
  }
  return e;
}

inline Explanation explain_case(const TreeEnsemble& model, const FeatureVector& x) {
  return explain_case(model, learn::align(model.schema, x));
}

inline json to_json(const Explanation& e) {
  json contributions = json::array();
  for (const auto& c : e.contributions)
    contributions.push_back({{"feature", c.feature},
                             {"value", c.value ? json(*c.value) : json(nullptr)},
                             {"phi", c.phi},
                             {"direction", c.direction}});
  return {{"base_value", e.attribution.base_value},
          {"base_probability", e.base_probability},
          {"margin", e.attribution.margin},
          {"probability", e.probability},
          {"contributions", std::move(contributions)}};
}

enum class Band { Low = 0, Medium = 1, High = 2 };

struct FeatureSummary {
  std::string feature;
  std::vector<std::pair<Value, double>> points;  // (feature value, phi) per cohort row
  double mean_abs_phi = 0.0;
  double mean_phi = 0.0;
  // Empirical 1/3 and 2/3 quantiles of the observed values.
  std::optional<double> q_low;
  std::optional<double> q_high;
  std::array<std::optional<double>, 3> band_mean_phi{};
  std::array<std::size_t, 3> band_count{};
};

struct GlobalSummary {
  std::vector<FeatureSummary> features;  // schema order
  std::vector<std::size_t> ranking;      // by mean |phi| descending, ties in schema order
};

// Linear-interpolation quantile of sorted values.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline GlobalSummary global_summary(const TreeEnsemble& model, const CohortDataset& cohort) {
  if (cohort.size() == 0) throw DataError("global summary needs a nonempty cohort");
  const std::size_t d = model.schema.size();
  std::vector<std::vector<Value>> rows;
  rows.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i)
    rows.push_back(learn::align(model.schema, cohort.feature_vector(i)));

  GlobalSummary s;
  s.features.resize(d);
  for (std::size_t j = 0; j < d; ++j) s.features[j].feature = model.schema[j];
  for (const auto& row : rows) {
    const auto a = tree_shap(model, row);
    for (std::size_t j = 0; j < d; ++j) s.features[j].points.emplace_back(row[j], a.phi[j]);
  }

  const double n = static_cast<double>(rows.size());
  for (auto& f : s.features) {
    double abs_sum = 0.0, sum = 0.0;
    std::vector<double> observed;
    for (const auto& [v, phi] : f.points) {
      abs_sum += std::abs(phi);
      sum += phi;
      if (v) observed.push_back(*v);
    }
    f.mean_abs_phi = abs_sum / n;
    f.mean_phi = sum / n;
    if (observed.empty()) continue;
    std::sort(observed.begin(), observed.end());
    f.q_low = quantile_sorted(observed, 1.0 / 3.0);
    f.q_high = quantile_sorted(observed, 2.0 / 3.0);
    std::array<double, 3> band_sum{};
    for (const auto& [v, phi] : f.points) {
      if (!v) continue;
      const auto b = static_cast<std::size_t>(*v <= *f.q_low ? Band::Low : *v <= *f.q_high ? Band::Medium : Band::High);
      band_sum[b] += phi;
      ++f.band_count[b];
    }
    for (std::size_t b = 0; b < 3; ++b)
      if (f.band_count[b] > 0) f.band_mean_phi[b] = band_sum[b] / static_cast<double>(f.band_count[b]);
  }

  s.ranking.resize(d);
  std::iota(s.ranking.begin(), s.ranking.end(), std::size_t{0});
  std::stable_sort(s.ranking.begin(), s.ranking.end(), [&](std::size_t a, std::size_t b) {
    return s.features[a].mean_abs_phi > s.features[b].mean_abs_phi;
  });
  return s;
}

// Scatter rows `feature<TAB>value<TAB>phi`, missing values as NA.
inline void write_summary_tsv(std::ostream& out, const GlobalSummary& s) {
  out << "feature\tvalue\tphi\n";
  for (const auto& f : s.features)
    for (const auto& [v, phi] : f.points)
      out << f.feature << '\t' << (v ? format_double(*v) : std::string("NA")) << '\t' << format_double(phi) << '\n';
}

inline json to_json(const GlobalSummary& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json ranking = json::array();
  for (auto j : s.ranking) {
    const auto& f = s.features[j];
    ranking.push_back({{"feature", f.feature},
                       {"mean_abs_phi", f.mean_abs_phi},
                       {"mean_phi", f.mean_phi},
                       {"tercile_bounds", {opt(f.q_low), opt(f.q_high)}},
                       {"band_mean_phi",
                        {{"low", opt(f.band_mean_phi[0])}, {"medium", opt(f.band_mean_phi[1])}, {"high", opt(f.band_mean_phi[2])}}},
                       {"band_count", {{"low", f.band_count[0]}, {"medium", f.band_count[1]}, {"high", f.band_count[2]}}}});
  }
  return {{"ranking", ranking}};
}

struct PDCurve {
  std::string feature;
  std::vector<double> grid;
  std::vector<double> pd;  // mean predicted probability at each grid value
};

inline PDCurve partial_dependence(const TreeEnsemble& model, const std::string& feature, const std::vector<double>& grid,
                                  const CohortDataset& cohort) {
  auto it = std::find(model.schema.begin(), model.schema.end(), feature);
  if (it == model.schema.end()) throw SchemaMismatch("feature '" + feature + "' is not in the model schema");
  const auto j = static_cast<std::size_t>(it - model.schema.begin());
  if (grid.empty()) throw DomainError("partial dependence grid is empty");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!std::isfinite(grid[g])) throw DomainError("partial dependence grid values must be finite");
    if (g > 0 && !(grid[g] > grid[g - 1])) throw DomainError("partial dependence grid must be strictly increasing");
  }
  if (cohort.size() == 0) throw DataError("partial dependence needs a nonempty cohort");

  std::vector<std::vector<Value>> rows;
  rows.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i)
    rows.push_back(learn::align(model.schema, cohort.feature_vector(i)));

  PDCurve c;
  c.feature = feature;
  c.grid = grid;
  for (double v : grid) {
    double s = 0.0;
    for (auto& row : rows) {
      const Value saved = row[j];
      row[j] = v;
      s += learn::predict_proba(model, row);
      row[j] = saved;
    }
    c.pd.push_back(s / static_cast<double>(rows.size()));
  }
  return c;
}

// Distinct quantiles of the observed values from 5% to 95%.
inline std::vector<double> default_pd_grid(const CohortDataset& cohort, const std::string& feature, std::size_t points = 20) {
  auto j = cohort.index_of(feature);
  if (!j) throw SchemaMismatch("feature '" + feature + "' is not in the cohort");
  std::vector<double> observed;
  for (const auto& row : cohort.rows)
    if (row[*j]) observed.push_back(*row[*j]);
  if (observed.empty()) throw DataError("feature '" + feature + "' has no observed values");
  std::sort(observed.begin(), observed.end());
  std::vector<double> grid;
  const std::size_t m = std::max<std::size_t>(points, 2);
  for (std::size_t i = 0; i < m; ++i) {
    const double q = quantile_sorted(observed, 0.05 + 0.90 * static_cast<double>(i) / static_cast<double>(m - 1));
    if (grid.empty() || q > grid.back()) grid.push_back(q);
  }
  return grid;
}

inline void write_pd_tsv(std::ostream& out, const PDCurve& c) {
  out << "value\tpd\n";
  for (std::size_t i = 0; i < c.grid.size(); ++i) out << format_double(c.grid[i]) << '\t' << format_double(c.pd[i]) << '\n';
}

}  // namespace triad::explain
