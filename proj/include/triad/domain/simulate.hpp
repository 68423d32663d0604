#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "triad/domain/features.hpp"
#include "triad/domain/types.hpp"

namespace triad {

// Generator settings for a synthetic cohort over the default schema.
struct CohortSpec {
  long n = 4597;
  double positive_rate = 0.10;
  // Per-cell probability that a learner feature is blanked after labeling.
  double missing_rate = 0.0;
  // Scale of the logistic noise added to the planted risk before ranking.
  double noise_scale = 0.6;
  double male_fraction = 2534.0 / 4597.0;
};

// Coefficients of the planted risk over standardized features. All are
// non-negative, so the planted risk is monotone non-decreasing in every
// feature; weight and BSA carry no direct effect.
struct PlantedRisk {
  static constexpr double kBmi = 1.2;
  static constexpr double kAge = 0.6;
  static constexpr double kSbp = 0.5;
  static constexpr double kDbp = 0.25;

  // Population centering used by the generator.
  static constexpr double kBmiMean = 28.0, kBmiSd = 5.0;
  static constexpr double kAgeMean = 52.0, kAgeSd = 12.0;
  static constexpr double kSbpMean = 135.0, kSbpSd = 16.0;
  static constexpr double kDbpMean = 82.0, kDbpSd = 10.0;
};

// Planted risk for a row in default-schema order (bmi, mean_dbp, age,
// mean_sbp, weight, bsa). Missing cells contribute their population mean.
inline double planted_risk(std::span<const Value> row) {
  auto z = [&](std::size_t i, double mean, double sd) { return row[i] ? (*row[i] - mean) / sd : 0.0; };
  using P = PlantedRisk;
  return P::kBmi * z(0, P::kBmiMean, P::kBmiSd) + P::kDbp * z(1, P::kDbpMean, P::kDbpSd) +
         P::kAge * z(2, P::kAgeMean, P::kAgeSd) + P::kSbp * z(3, P::kSbpMean, P::kSbpSd);
}

inline CohortDataset simulate_cohort(const CohortSpec& spec, std::uint64_t seed) {
  if (spec.n <= 0) throw ConfigError("n must be positive");
  if (!(spec.positive_rate > 0.0 && spec.positive_rate < 1.0))
    throw ConfigError("positive rate must lie in (0, 1)");
  if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0))
    throw ConfigError("missing rate must lie in [0, 1)");
  if (!(spec.noise_scale >= 0.0)) throw ConfigError("noise scale must be non-negative");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto n = static_cast<std::size_t>(spec.n);
  CohortDataset ds;
  ds.schema = default_schema();
  ds.rows.reserve(n);
  std::vector<double> latent(n);

  for (std::size_t i = 0; i < n; ++i) {
    const bool male = unit(rng) < spec.male_fraction;
    const double age = std::round(std::clamp(52.0 + 12.0 * normal(rng), 18.0, 90.0));
    const double height = male ? 176.0 + 7.0 * normal(rng) : 163.0 + 6.5 * normal(rng);
    const double bmi_target = std::clamp(28.0 + 5.0 * normal(rng), 16.0, 55.0);
    const double weight = std::round(bmi_target * (height / 100.0) * (height / 100.0) * 10.0) / 10.0;
    const double sbp = std::round(std::clamp(112.0 + 0.45 * (age - 52.0) + 0.9 * (bmi_target - 28.0) +
                                                 23.0 + 13.0 * normal(rng),
                                             85.0, 220.0));
    const double dbp = std::round(std::clamp(0.5 * sbp + 14.5 + 7.0 * normal(rng), 50.0, 130.0));

    RawPatient raw;
    raw.sex = male ? Sex::M : Sex::F;
    raw.age = static_cast<int>(age);
    raw.height_cm = height;
    raw.weight_kg = weight;
    raw.mean_sbp = sbp;
    raw.mean_dbp = dbp;
    auto fv = derive_features(raw);
    std::vector<Value> row(fv.values().begin(), fv.values().end());

    const double u = std::clamp(unit(rng), 1e-12, 1.0 - 1e-12);
    latent[i] = planted_risk(row) + spec.noise_scale * std::log(u / (1.0 - u));
    ds.rows.push_back(std::move(row));
  }

  // Exact prevalence: the top round(n * rate) latent scores are positive.
  auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.positive_rate));
  if (n >= 2) k = std::clamp<std::size_t>(k, 1, n - 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return latent[a] > latent[b]; });
  ds.labels.assign(n, 0);
  for (std::size_t r = 0; r < k; ++r) ds.labels[order[r]] = 1;

  if (spec.missing_rate > 0.0) {
    for (auto& row : ds.rows)
      for (auto& cell : row)
        if (unit(rng) < spec.missing_rate) cell.reset();
  }
  return ds;
}

}  // namespace triad
