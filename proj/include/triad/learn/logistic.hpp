#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "triad/domain/types.hpp"
#include "triad/learn/metrics.hpp"
#include "triad/learn/tree.hpp"

namespace triad::learn {

struct LogisticConfig {
  int iterations = 500;
  double step = 0.5;
  double l2 = 1e-3;
  // Fit on z-scored features; weights are reported on the original scale.
  bool standardize = true;

  void validate() const {
    if (iterations < 0) throw ConfigError("iterations must be non-negative");
    if (!(step > 0.0)) throw ConfigError("step must be positive");
    if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
  }
};

struct LogisticModel {
  std::vector<std::string> schema;
  std::vector<double> weights;
  double intercept = 0.0;
  // Substituted for missing cells (training means).
  std::vector<double> fill;
};

struct LogisticFit {
  LogisticModel model;
  // Training objective before the first step and after each iteration.
  std::vector<double> objective_trace;
};

inline double predict_margin(const LogisticModel& m, std::span<const Value> row) {
  if (row.size() != m.schema.size()) throw SchemaMismatch("row width does not match the logistic model");
  double z = m.intercept;
  for (std::size_t j = 0; j < row.size(); ++j) z += m.weights[j] * (row[j] ? *row[j] : m.fill[j]);
  return z;
}

inline double predict_proba(const LogisticModel& m, std::span<const Value> row) {
  return sigmoid(predict_margin(m, row));
}

// Batch gradient descent on mean log-loss + (l2 / 2) * |w|^2 (intercept
// unpenalized), in the standardized space when `standardize` is set.
inline LogisticFit train_logistic_traced(const CohortDataset& train, const LogisticConfig& config = {}) {
  config.validate();
  train.validate();
  const std::size_t n = train.size(), d = train.schema.size();
  if (n == 0) throw DataError("training set is empty");
  const std::size_t pos = train.positives();
  if (pos == 0 || pos == n) throw DataError("logistic regression needs both classes");

  std::vector<double> mean(d, 0.0), scale(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0, c = 0.0;
    for (const auto& row : train.rows)
      if (row[j]) {
        s += *row[j];
        c += 1.0;
      }
    mean[j] = c > 0.0 ? s / c : 0.0;
  }
  if (config.standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      double ss = 0.0, c = 0.0;
      for (const auto& row : train.rows)
        if (row[j]) {
          ss += (*row[j] - mean[j]) * (*row[j] - mean[j]);
          c += 1.0;
        }
      const double sd = c > 1.0 ? std::sqrt(ss / c) : 0.0;
      scale[j] = sd > 0.0 ? sd : 1.0;
    }
  }
  // Design matrix in the fitting space; missing cells sit at the mean.
  std::vector<double> x(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double v = train.rows[i][j] ? *train.rows[i][j] : mean[j];
      x[i * d + j] = config.standardize ? (v - mean[j]) / scale[j] : v;
    }

  std::vector<double> w(d, 0.0), grad(d);
  double b = 0.0;
  auto objective = [&]() {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = b;
      for (std::size_t j = 0; j < d; ++j) z += w[j] * x[i * d + j];
      // log(1 + e^z) - y z, written to avoid overflow.
      const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      loss += softplus - static_cast<double>(train.labels[i]) * z;
    }
    double reg = 0.0;
    for (double wj : w) reg += wj * wj;
    return loss / static_cast<double>(n) + 0.5 * config.l2 * reg;
  };

  LogisticFit fit;
  fit.objective_trace.push_back(objective());
  for (int it = 0; it < config.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = b;
      for (std::size_t j = 0; j < d; ++j) z += w[j] * x[i * d + j];
      const double r = sigmoid(z) - static_cast<double>(train.labels[i]);
      gb += r;
      for (std::size_t j = 0; j < d; ++j) grad[j] += r * x[i * d + j];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) w[j] -= config.step * (grad[j] * inv_n + config.l2 * w[j]);
    b -= config.step * gb * inv_n;
    fit.objective_trace.push_back(objective());
  }

  LogisticModel& m = fit.model;
  m.schema = train.schema;
  m.fill = mean;
  m.weights.resize(d);
  m.intercept = b;
  for (std::size_t j = 0; j < d; ++j) {
    if (config.standardize) {
      m.weights[j] = w[j] / scale[j];
      m.intercept -= w[j] * mean[j] / scale[j];
    } else {
      m.weights[j] = w[j];
    }
  }
  return fit;
}

inline LogisticModel train_logistic(const CohortDataset& train, const LogisticConfig& config = {}) {
  return train_logistic_traced(train, config).model;
}

}  // namespace triad::learn
