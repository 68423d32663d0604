#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "triad/domain/types.hpp"
#include "triad/learn/tree.hpp"

namespace triad::learn {

// FNV-1a over schema, cell bits, missing flags and labels.
inline std::string dataset_digest(const CohortDataset& ds) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& name : ds.schema) {
    mix(name.data(), name.size());
    mix("\0", 1);
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (const auto& v : ds.rows[i]) {
      const unsigned char flag = v ? 1 : 0;
      mix(&flag, 1);
      if (v) {
        double d = *v;
        mix(&d, sizeof d);
      }
    }
    mix(&ds.labels[i], sizeof(int));
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

inline double prevalence_base_margin(double prevalence) {
  const double p = std::clamp(prevalence, 1e-6, 1.0 - 1e-6);
  return logit(p);
}

// Second-order split gain for a parent (G, H) split into (GL, HL) / (GR, HR).
inline double split_gain(double gl, double hl, double gr, double hr, double lambda) {
  const double g = gl + gr;
  const double h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
}

namespace detail {

class TreeGrower {
 public:
  TreeGrower(const CohortDataset& data, const TrainConfig& config)
      : config_(config), n_(data.size()), d_(data.schema.size()) {
    values_.assign(n_ * d_, 0.0);
    present_.assign(n_ * d_, 0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t f = 0; f < d_; ++f)
        if (const auto& v = data.rows[i][f]) {
          values_[f * n_ + i] = *v;
          present_[f * n_ + i] = 1;
        }
    sorted_.resize(d_);
    for (std::size_t f = 0; f < d_; ++f) {
      auto& s = sorted_[f];
      for (std::uint32_t i = 0; i < n_; ++i)
        if (present_[f * n_ + i]) s.push_back(i);
      std::stable_sort(s.begin(), s.end(),
                       [&](std::uint32_t a, std::uint32_t b) { return value(f, a) < value(f, b); });
    }
    goes_left_.assign(n_, 0);
  }

  // Fits one tree to the given gradients. `leaf_of_row` receives, per
  // training row, the leaf value it was routed to.
  Tree grow(const std::vector<double>& grad, const std::vector<double>& hess, std::vector<double>& leaf_of_row) {
    grad_ = &grad;
    hess_ = &hess;
    leaf_of_row_ = &leaf_of_row;
    tree_ = Tree{};
    std::vector<std::uint32_t> rows(n_);
    std::iota(rows.begin(), rows.end(), 0u);
    grow_node(std::move(rows), sorted_, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    bool missing_left = true;
  };

  double value(std::size_t f, std::uint32_t row) const { return values_[f * n_ + row]; }
  bool present(std::size_t f, std::uint32_t row) const { return present_[f * n_ + row] != 0; }

  int grow_node(std::vector<std::uint32_t> rows, const std::vector<std::vector<std::uint32_t>>& sorted, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    double g = 0.0, h = 0.0;
    for (auto r : rows) {
      g += (*grad_)[r];
      h += (*hess_)[r];
    }
    const double cover = static_cast<double>(rows.size());

    Split best;
    if (depth < config_.max_depth && rows.size() >= 2) best = find_split(rows.size(), g, h, sorted);

    if (best.feature < 0) {
      TreeNode& leaf = tree_.nodes[static_cast<std::size_t>(index)];
      leaf.is_leaf = true;
      leaf.cover = cover;
      leaf.value = -config_.learning_rate * g / (h + config_.l2_leaf);
      for (auto r : rows) (*leaf_of_row_)[r] = leaf.value;
      return index;
    }

    const auto f = static_cast<std::size_t>(best.feature);
    for (auto r : rows)
      goes_left_[r] = present(f, r) ? (value(f, r) < best.threshold) : best.missing_left;

    std::vector<std::uint32_t> left_rows, right_rows;
    for (auto r : rows) (goes_left_[r] ? left_rows : right_rows).push_back(r);
    std::vector<std::vector<std::uint32_t>> left_sorted(d_), right_sorted(d_);
    for (std::size_t k = 0; k < d_; ++k)
      for (auto r : sorted[k]) (goes_left_[r] ? left_sorted[k] : right_sorted[k]).push_back(r);

    const int l = grow_node(std::move(left_rows), left_sorted, depth + 1);
    const int r = grow_node(std::move(right_rows), right_sorted, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.is_leaf = false;
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.missing_left = best.missing_left;
    node.left = l;
    node.right = r;
    node.cover = cover;
    return index;
  }

  // Exact greedy search. Features are scanned in index order and thresholds
  // in ascending order; only a strictly larger gain replaces the incumbent.
  Split find_split(std::size_t node_rows, double g, double h,
                   const std::vector<std::vector<std::uint32_t>>& sorted) const {
    const double lambda = config_.l2_leaf;
    const double min_cover = config_.min_child_cover;
    Split best;
    for (std::size_t f = 0; f < d_; ++f) {
      const auto& s = sorted[f];
      if (s.size() < 2) continue;
      double gp = 0.0, hp = 0.0;
      for (auto r : s) {
        gp += (*grad_)[r];
        hp += (*hess_)[r];
      }
      const double gm = g - gp, hm = h - hp;
      const double n_miss = static_cast<double>(node_rows - s.size());
      double gl = 0.0, hl = 0.0;
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        gl += (*grad_)[s[i]];
        hl += (*hess_)[s[i]];
        const double a = value(f, s[i]);
        const double b = value(f, s[i + 1]);
        if (!(a < b)) continue;
        double thr = a + (b - a) / 2.0;
        if (!(thr > a)) thr = b;
        const double gr = gp - gl, hr = hp - hl;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(s.size() - i - 1);

        auto consider = [&](double gain, bool missing_left, double cover_l, double cover_r) {
          if (cover_l < min_cover || cover_r < min_cover) return;
          if (gain > 0.0 && gain > best.gain) best = {gain, static_cast<int>(f), thr, missing_left};
        };
        if (n_miss == 0.0) {
          // No missing rows here: send future missing values to the larger child.
          consider(split_gain(gl, hl, gr, hr, lambda), nl >= nr, nl, nr);
        } else {
          const double gain_left = split_gain(gl + gm, hl + hm, gr, hr, lambda);
          const double gain_right = split_gain(gl, hl, gr + gm, hr + hm, lambda);
          if (gain_left >= gain_right) {
            consider(gain_left, true, nl + n_miss, nr);
            consider(gain_right, false, nl, nr + n_miss);
          } else {
            consider(gain_right, false, nl, nr + n_miss);
            consider(gain_left, true, nl + n_miss, nr);
          }
        }
      }
    }
    return best;
  }

  TrainConfig config_;
  std::size_t n_, d_;
  std::vector<double> values_;
  std::vector<char> present_;
  std::vector<std::vector<std::uint32_t>> sorted_;
  std::vector<char> goes_left_;
  const std::vector<double>* grad_ = nullptr;
  const std::vector<double>* hess_ = nullptr;
  std::vector<double>* leaf_of_row_ = nullptr;
  Tree tree_;
};

}  // namespace detail

// Called after each boosting round with the ensemble built so far.
using RoundObserver = std::function<void(const TreeEnsemble&)>;

// Logistic-loss gradient boosting with exact greedy splits. A single-class
// training set yields a zero-tree ensemble at the clamped prevalence.
inline TreeEnsemble train_gbdt(const CohortDataset& train, const TrainConfig& config,
                               const RoundObserver& observer = {}) {
  config.validate();
  train.validate();
  if (train.size() == 0) throw DataError("training set is empty");

  TreeEnsemble model;
  model.schema = train.schema;
  model.learning_rate = config.learning_rate;
  model.base_margin = prevalence_base_margin(train.prevalence());
  model.metadata.seed = config.seed;
  model.metadata.config = config;
  model.metadata.train_digest = dataset_digest(train);

  const std::size_t pos = train.positives();
  if (pos == 0 || pos == train.size()) return model;

  const std::size_t n = train.size();
  std::vector<double> margin(n, model.base_margin), grad(n), hess(n), leaf(n);
  detail::TreeGrower grower(train, config);
  for (int round = 0; round < config.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      grad[i] = p - static_cast<double>(train.labels[i]);
      hess[i] = p * (1.0 - p);
    }
    model.trees.push_back(grower.grow(grad, hess, leaf));
    for (std::size_t i = 0; i < n; ++i) margin[i] += leaf[i];
    if (observer) observer(model);
  }
  return model;
}

}  // namespace triad::learn
