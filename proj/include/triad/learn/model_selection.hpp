#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <tuple>
#include <utility>
#include <vector>

#include "triad/domain/types.hpp"
#include "triad/learn/gbdt.hpp"
#include "triad/learn/metrics.hpp"
#include "triad/learn/tree.hpp"

namespace triad::learn {

struct Split {
  CohortDataset train;
  CohortDataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

namespace detail {

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> rows_by_class(const CohortDataset& c) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < c.size(); ++i) (c.labels[i] == 1 ? pos : neg).push_back(i);
  return {pos, neg};
}

}  // namespace detail

// Per-class shuffle, then round(count * fraction) of each class (at least
// one, at most count - 1) goes to the test part.
inline Split stratified_split(const CohortDataset& cohort, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in (0, 1)");
  cohort.validate();
  auto [pos, neg] = detail::rows_by_class(cohort);
  if (pos.size() < 2 || neg.size() < 2) throw DataError("each class needs at least 2 members to split");

  std::mt19937_64 rng(seed);
  Split out;
  for (auto* cls : {&pos, &neg}) {
    std::shuffle(cls->begin(), cls->end(), rng);
    auto m = static_cast<std::size_t>(std::llround(static_cast<double>(cls->size()) * test_fraction));
    m = std::clamp<std::size_t>(m, 1, cls->size() - 1);
    out.test_rows.insert(out.test_rows.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(m));
    out.train_rows.insert(out.train_rows.end(), cls->begin() + static_cast<std::ptrdiff_t>(m), cls->end());
  }
  std::sort(out.test_rows.begin(), out.test_rows.end());
  std::sort(out.train_rows.begin(), out.train_rows.end());
  out.train = cohort.subset(out.train_rows);
  out.test = cohort.subset(out.test_rows);
  return out;
}

// Fold id per row. Each class is shuffled and dealt round-robin, the
// negatives continuing where the positives stopped.
inline std::vector<int> stratified_folds(const CohortDataset& cohort, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k must be at least 2");
  auto [pos, neg] = detail::rows_by_class(cohort);
  if (pos.size() < static_cast<std::size_t>(k) || neg.size() < static_cast<std::size_t>(k))
    throw DataError("each class needs at least k members for stratified k-fold");
  std::mt19937_64 rng(seed);
  std::vector<int> fold(cohort.size(), 0);
  std::size_t dealt = 0;
  for (auto* cls : {&pos, &neg}) {
    std::shuffle(cls->begin(), cls->end(), rng);
    for (auto r : *cls) fold[r] = static_cast<int>(dealt++ % static_cast<std::size_t>(k));
  }
  return fold;
}

struct CvRow {
  TrainConfig config;
  double mean_auc = 0.0;
  double std_auc = 0.0;  // sample standard deviation across folds
  std::vector<double> fold_auc;
};

struct GridSearchResult {
  TrainConfig best;
  std::size_t best_index = 0;
  std::vector<CvRow> table;  // grid order
};

inline std::vector<TrainConfig> default_grid() {
  std::vector<TrainConfig> grid;
  for (int depth : {2, 3, 4})
    for (int rounds : {50, 100, 200})
      for (double eta : {0.05, 0.1, 0.3}) {
        TrainConfig c;
        c.max_depth = depth;
        c.rounds = rounds;
        c.learning_rate = eta;
        c.l2_leaf = 1.0;
        grid.push_back(c);
      }
  return grid;
}

// Stratified k-fold CV over the grid, selecting by mean held-out AUC.
// Configs that differ only in `rounds` share one boosting run per fold and
// are scored at their round count, which equals training them separately.
inline GridSearchResult grid_search(const CohortDataset& cohort, const std::vector<TrainConfig>& grid, int k,
                                    std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("grid is empty");
  for (const auto& c : grid) c.validate();
  cohort.validate();
  const auto fold = stratified_folds(cohort, k, seed);

  GridSearchResult result;
  result.table.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    result.table[i].config = grid[i];
    result.table[i].fold_auc.assign(static_cast<std::size_t>(k), 0.0);
  }

  using Key = std::tuple<int, double, double, double, std::uint64_t>;
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& c = grid[i];
    groups[{c.max_depth, c.learning_rate, c.l2_leaf, c.min_child_cover, c.seed}].push_back(i);
  }

  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < cohort.size(); ++i) (fold[i] == f ? va : tr).push_back(i);
    const auto train = cohort.subset(tr);
    const auto valid = cohort.subset(va);

    for (const auto& [key, members] : groups) {
      TrainConfig run = grid[members.front()];
      int max_rounds = 0;
      for (auto m : members) max_rounds = std::max(max_rounds, grid[m].rounds);
      run.rounds = max_rounds;

      std::vector<double> margin;
      auto score_at = [&](int rounds) {
        std::vector<double> p(margin.size());
        for (std::size_t i = 0; i < margin.size(); ++i) p[i] = sigmoid(margin[i]);
        const auto auc = auc_rank(p, valid.labels);
        if (!auc) throw DataError("validation fold lacks a class");
        for (auto m : members)
          if (grid[m].rounds == rounds) result.table[m].fold_auc[static_cast<std::size_t>(f)] = *auc;
      };
      auto observer = [&](const TreeEnsemble& model) {
        const auto& t = model.trees.back();
        for (std::size_t i = 0; i < valid.size(); ++i) margin[i] += t.predict(valid.row(i));
        score_at(static_cast<int>(model.trees.size()));
      };
      const double base = prevalence_base_margin(train.prevalence());
      margin.assign(valid.size(), base);
      score_at(0);
      train_gbdt(train, run, observer);
    }
  }

  for (auto& row : result.table) {
    const double kk = static_cast<double>(k);
    double s = 0.0;
    for (double a : row.fold_auc) s += a;
    row.mean_auc = s / kk;
    double ss = 0.0;
    for (double a : row.fold_auc) ss += (a - row.mean_auc) * (a - row.mean_auc);
    row.std_auc = std::sqrt(ss / (kk - 1.0));
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const auto& a = result.table[i];
    const auto& b = result.table[best];
    if (a.mean_auc > b.mean_auc ||
        (a.mean_auc == b.mean_auc && std::pair(a.config.rounds, a.config.max_depth) <
                                         std::pair(b.config.rounds, b.config.max_depth)))
      best = i;
  }
  result.best_index = best;
  result.best = grid[best];
  return result;
}

struct EliminationStep {
  std::vector<std::string> features;
  double mean_auc = 0.0;
  std::string removed;  // empty for the starting set
};

inline CohortDataset select_features(const CohortDataset& cohort, const std::vector<std::string>& features) {
  CohortDataset out;
  out.schema = features;
  out.labels = cohort.labels;
  std::vector<std::size_t> cols;
  for (const auto& f : features) {
    auto i = cohort.index_of(f);
    if (!i) throw SchemaMismatch("feature '" + f + "' not in cohort");
    cols.push_back(*i);
  }
  out.rows.reserve(cohort.size());
  for (const auto& row : cohort.rows) {
    std::vector<Value> r;
    r.reserve(cols.size());
    for (auto c : cols) r.push_back(row[c]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

// Greedy backward elimination: repeatedly drops the feature whose removal
// gives the best CV AUC, down to `min_features`.
inline std::vector<EliminationStep> backward_elimination(const CohortDataset& cohort, const TrainConfig& config,
                                                         int k, std::uint64_t seed, std::size_t min_features = 1) {
  if (min_features < 1) throw ConfigError("min_features must be at least 1");
  auto cv = [&](const std::vector<std::string>& feats) {
    return grid_search(select_features(cohort, feats), {config}, k, seed).table.front().mean_auc;
  };
  std::vector<EliminationStep> steps;
  std::vector<std::string> current = cohort.schema;
  steps.push_back({current, cv(current), ""});
  while (current.size() > min_features) {
    double best_auc = -1.0;
    std::size_t best_drop = 0;
    for (std::size_t j = 0; j < current.size(); ++j) {
      auto trial = current;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(j));
      const double a = cv(trial);
      if (a > best_auc) {
        best_auc = a;
        best_drop = j;
      }
    }
    std::string removed = current[best_drop];
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(best_drop));
    steps.push_back({current, best_auc, removed});
  }
  return steps;
}

}  // namespace triad::learn
