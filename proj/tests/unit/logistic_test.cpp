#include <cmath>

#include <gtest/gtest.h>

#include "triad/domain/simulate.hpp"
#include "triad/learn/logistic.hpp"
#include "triad/learn/metrics.hpp"

namespace triad::learn {
namespace {

CohortDataset one_dim(const std::vector<double>& xs, const std::vector<int>& ys) {
  CohortDataset ds;
  ds.schema = {"x"};
  for (double x : xs) ds.rows.push_back({x});
  ds.labels = ys;
  return ds;
}

// Reflection x -> -x with y -> 1-y maps the data onto itself.
CohortDataset symmetric() {
  return one_dim({-2, -1, -0.5, 0.5, 1, 2, -1.5, 1.5}, {0, 0, 1, 0, 1, 1, 1, 0});
}

double objective(const CohortDataset& ds, double w, double l2) {
  double s = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double z = w * *ds.rows[i][0];
    s += std::log1p(std::exp(z)) - ds.labels[i] * z;
  }
  return s / static_cast<double>(ds.size()) + 0.5 * l2 * w * w;
}

TEST(Logistic, SymmetricDataHasZeroIntercept) {
  auto m = train_logistic(symmetric(), {.iterations = 2000, .step = 0.5, .l2 = 0.1, .standardize = false});
  EXPECT_LT(std::abs(m.intercept), 1e-6);
}

TEST(Logistic, WeightSignFollowsSeparation) {
  auto up = one_dim({1, 2, 3, 4, 5, 6}, {0, 0, 0, 1, 1, 1});
  auto down = one_dim({1, 2, 3, 4, 5, 6}, {1, 1, 1, 0, 0, 0});
  EXPECT_GT(train_logistic(up).weights[0], 0.0);
  EXPECT_LT(train_logistic(down).weights[0], 0.0);
}

TEST(Logistic, StrongL2MatchesOneDimensionalMinimizer) {
  const double l2 = 1.0;
  auto ds = symmetric();
  // Coarse grid, then golden-section refinement of the convex objective.
  double best = 0, best_f = objective(ds, 0, l2);
  for (double w = -5; w <= 5; w += 1e-3)
    if (objective(ds, w, l2) < best_f) best_f = objective(ds, w, l2), best = w;
  double a = best - 1e-3, b = best + 1e-3;
  const double phi = (std::sqrt(5.0) - 1) / 2;
  for (int i = 0; i < 200; ++i) {
    const double c = b - phi * (b - a), d = a + phi * (b - a);
    if (objective(ds, c, l2) < objective(ds, d, l2)) b = d;
    else a = c;
  }
  const double oracle = (a + b) / 2;
  auto m = train_logistic(ds, {.iterations = 3000, .step = 0.5, .l2 = l2, .standardize = false});
  EXPECT_NEAR(m.weights[0], oracle, 1e-4);
}

TEST(Logistic, ObjectiveNonIncreasingWithDefaultStep) {
  auto ds = simulate_cohort({.n = 800, .positive_rate = 0.15, .missing_rate = 0.05}, 3);
  auto fit = train_logistic_traced(ds);
  ASSERT_EQ(fit.objective_trace.size(), 501u);
  for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
    EXPECT_LE(fit.objective_trace[i], fit.objective_trace[i - 1] + 1e-15);
  auto met = evaluate(fit.model, ds);
  EXPECT_GT(*met.auc, 0.8);
}

TEST(Logistic, Errors) {
  EXPECT_THROW(train_logistic(one_dim({1, 2}, {0, 0})), DataError);
  EXPECT_THROW(train_logistic(symmetric(), {.step = 0}), ConfigError);
  EXPECT_THROW(train_logistic(symmetric(), {.l2 = -1}), ConfigError);
}

TEST(Logistic, Deterministic) {
  auto a = train_logistic(symmetric(), {});
  auto b = train_logistic(symmetric(), {});
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.intercept, b.intercept);
}

}  // namespace
}  // namespace triad::learn
