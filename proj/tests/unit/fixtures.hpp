#pragma once

// Test-only builders and oracles shared by the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "triad/domain/types.hpp"
#include "triad/learn/tree.hpp"

namespace triad::testing {

using learn::Tree;
using learn::TreeEnsemble;
using learn::TreeNode;

inline TreeNode leaf(double value, double cover) {
  TreeNode n;
  n.is_leaf = true;
  n.value = value;
  n.cover = cover;
  return n;
}

inline TreeNode split(int feature, double threshold, int left, int right, double cover, bool missing_left = true) {
  TreeNode n;
  n.is_leaf = false;
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  n.cover = cover;
  n.missing_left = missing_left;
  return n;
}

inline std::vector<std::string> feature_names(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
  return names;
}

inline TreeEnsemble ensemble(std::size_t d, std::vector<Tree> trees, double base = 0.0) {
  TreeEnsemble m;
  m.schema = feature_names(d);
  m.base_margin = base;
  m.trees = std::move(trees);
  return m;
}

// Stump on feature 0: x < threshold -> low, else high.
inline Tree stump(double threshold, double low, double high, double cover_low = 1.0, double cover_high = 1.0,
                  int feature = 0) {
  Tree t;
  t.nodes = {split(feature, threshold, 1, 2, cover_low + cover_high), leaf(low, cover_low), leaf(high, cover_high)};
  return t;
}

// Random tree with consistent integer covers; depth up to max_depth.
class RandomTreeBuilder {
 public:
  RandomTreeBuilder(std::size_t d, int max_depth, std::uint64_t seed) : d_(d), max_depth_(max_depth), rng_(seed) {}

  Tree build() {
    Tree t;
    std::uniform_int_distribution<int> cover(20, 400);
    grow(t, static_cast<double>(cover(rng_)), 0);
    return t;
  }

  std::vector<Value> random_case(double missing_rate = 0.1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Value> row(d_);
    for (auto& v : row) {
      if (u(rng_) < missing_rate) continue;
      // Snap some values onto the threshold lattice to exercise the boundary.
      v = u(rng_) < 0.2 ? std::round(u(rng_) * 10.0) / 10.0 : u(rng_);
    }
    return row;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  int grow(Tree& t, double cover, int depth) {
    const int index = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> value(0.0, 1.0);
    const bool make_leaf = depth >= max_depth_ || cover < 2.0 || (depth > 0 && u(rng_) < 0.15);
    if (make_leaf) {
      t.nodes[static_cast<std::size_t>(index)] = leaf(value(rng_), cover);
      return index;
    }
    std::uniform_int_distribution<int> feat(0, static_cast<int>(d_) - 1);
    const int f = feat(rng_);
    const double thr = std::round(u(rng_) * 10.0) / 10.0;
    std::uniform_int_distribution<int> left_share(1, static_cast<int>(cover) - 1);
    const double cl = static_cast<double>(left_share(rng_));
    const bool missing_left = u(rng_) < 0.5;
    const int l = grow(t, cl, depth + 1);
    const int r = grow(t, cover - cl, depth + 1);
    t.nodes[static_cast<std::size_t>(index)] = split(f, thr, l, r, cover, missing_left);
    return index;
  }

  std::size_t d_;
  int max_depth_;
  std::mt19937_64 rng_;
};

inline TreeEnsemble random_ensemble(std::size_t d, std::size_t trees, int max_depth, std::uint64_t seed) {
  RandomTreeBuilder b(d, max_depth, seed);
  std::vector<Tree> ts;
  for (std::size_t i = 0; i < trees; ++i) ts.push_back(b.build());
  std::normal_distribution<double> base(0.0, 1.0);
  return ensemble(d, std::move(ts), base(b.rng()));
}

// AUC by counting every positive/negative pair; ties count one half.
inline std::optional<double> auc_brute_force(std::span<const double> scores, std::span<const int> labels) {
  double count = 0.0;
  std::size_t pairs = 0, np = 0, nn = 0;
  for (int l : labels) (l == 1 ? np : nn)++;
  if (np == 0 || nn == 0) return std::nullopt;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) count += 1.0;
      else if (scores[i] == scores[j]) count += 0.5;
    }
  }
  return count / static_cast<double>(pairs);
}

}  // namespace triad::testing
