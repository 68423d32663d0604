#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "triad/domain/types.hpp"
#include "triad/learn/tree.hpp"

namespace triad::explain {

using learn::Tree;
using learn::TreeEnsemble;

// Shapley attribution of one case in margin (log-odds) units:
// base_value + sum(phi) == margin.
struct Attribution {
  std::vector<std::string> schema;
  std::vector<double> phi;
  double base_value = 0.0;
  double margin = 0.0;

  double sum() const {
    double s = base_value;
    for (double p : phi) s += p;
    return s;
  }
};

// Bit j set means feature j is conditioned on the case's value.
using FeatureMask = std::uint64_t;

// Every split node must carry a positive cover to weight its children.
inline void require_covers(const TreeEnsemble& model) {
  for (std::size_t t = 0; t < model.trees.size(); ++t)
    for (std::size_t i = 0; i < model.trees[t].nodes.size(); ++i) {
      const auto& n = model.trees[t].nodes[i];
      if (!n.is_leaf && !(n.cover > 0.0))
        throw CoverMissing("tree " + std::to_string(t) + " node " + std::to_string(i) + " has no cover");
    }
}

namespace detail {

inline double tree_expectation(const Tree& tree, int i, std::span<const Value> row, FeatureMask mask) {
  const auto& n = tree.nodes[static_cast<std::size_t>(i)];
  if (n.is_leaf) return n.value;
  if (mask >> n.feature & 1U) return tree_expectation(tree, tree.next(i, row[static_cast<std::size_t>(n.feature)]), row, mask);
  const auto& l = tree.nodes[static_cast<std::size_t>(n.left)];
  const auto& r = tree.nodes[static_cast<std::size_t>(n.right)];
  double s = 0.0;
  if (l.cover > 0.0) s += l.cover * tree_expectation(tree, n.left, row, mask);
  if (r.cover > 0.0) s += r.cover * tree_expectation(tree, n.right, row, mask);
  return s / n.cover;
}

}  // namespace detail

// Path-dependent E[f(x) | x_S]: conditioned splits follow the case, the
// others average their children by cover. Summed over trees plus base.
inline double conditional_expectation(const TreeEnsemble& model, std::span<const Value> row, FeatureMask subset) {
  learn::check_row(model, row);
  if (model.schema.size() > 64) throw TooManyFeatures(model.schema.size());
  require_covers(model);
  double v = model.base_margin;
  for (const auto& t : model.trees) v += detail::tree_expectation(t, 0, row, subset);
  return v;
}

inline double conditional_expectation(const TreeEnsemble& model, const FeatureVector& x, FeatureMask subset) {
  return conditional_expectation(model, learn::align(model.schema, x), subset);
}

inline constexpr std::size_t kOracleMaxFeatures = 12;

// Shapley values by enumerating all 2^d coalitions.
inline Attribution shap_oracle(const TreeEnsemble& model, std::span<const Value> row) {
  const std::size_t d = model.schema.size();
  if (d > kOracleMaxFeatures) throw TooManyFeatures(d);
  learn::check_row(model, row);
  require_covers(model);

  const std::size_t subsets = std::size_t{1} << d;
  std::vector<double> v(subsets);
  for (std::size_t s = 0; s < subsets; ++s) {
    double acc = model.base_margin;
    for (const auto& t : model.trees) acc += detail::tree_expectation(t, 0, row, s);
    v[s] = acc;
  }

  std::array<double, kOracleMaxFeatures + 1> fact{};
  fact[0] = 1.0;
  for (std::size_t i = 1; i <= kOracleMaxFeatures; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

  Attribution a;
  a.schema = model.schema;
  a.phi.assign(d, 0.0);
  a.base_value = v[0];
  a.margin = v[subsets - 1];
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    double phi = 0.0;
    for (std::size_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      const auto k = static_cast<std::size_t>(__builtin_popcountll(s));
      const double w = fact[k] * fact[d - k - 1] / fact[d];
      phi += w * (v[s | bit] - v[s]);
    }
    a.phi[j] = phi;
  }
  return a;
}

inline Attribution shap_oracle(const TreeEnsemble& model, const FeatureVector& x) {
  return shap_oracle(model, learn::align(model.schema, x));
}

namespace detail {

// One feature on the current root-to-node path: the fraction of cover that
// flows along the path when the feature is unknown (zero) or known (one),
// and the permutation weight of subsets of the current size.
struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

inline void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction, int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  const double dp1 = static_cast<double>(depth + 1);
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * static_cast<double>(i + 1) / dp1;
    path[i].pweight = zero_fraction * path[i].pweight * static_cast<double>(depth - i) / dp1;
  }
}

inline void unwind_path(PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  const double dp1 = static_cast<double>(depth + 1);
  double next = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next * dp1 / (static_cast<double>(i + 1) * one);
      next = tmp - path[i].pweight * zero * static_cast<double>(depth - i) / dp1;
    } else {
      path[i].pweight = path[i].pweight * dp1 / (zero * static_cast<double>(depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total permutation weight if the element at `index` were unwound.
inline double unwound_sum(const PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  const double dp1 = static_cast<double>(depth + 1);
  double next = path[depth].pweight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next * dp1 / (static_cast<double>(i + 1) * one);
      total += tmp;
      next = path[i].pweight - tmp * zero * static_cast<double>(depth - i) / dp1;
    } else if (zero != 0.0) {
      total += path[i].pweight / zero / (static_cast<double>(depth - i) / dp1);
    }
  }
  return total;
}

class TreeShapWalker {
 public:
  TreeShapWalker(const Tree& tree, std::span<const Value> row, std::vector<double>& phi)
      : tree_(tree), row_(row), phi_(phi) {
    const int d = tree.depth() + 2;
    buffer_.resize(static_cast<std::size_t>((d + 1) * (d + 2)));
  }

  void run() { recurse(0, 0, buffer_.data(), 1.0, 1.0, -1); }

 private:
  void recurse(int node, int depth, PathElement* parent_path, double zero_fraction, double one_fraction,
               int parent_feature) {
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    extend_path(path, depth, zero_fraction, one_fraction, parent_feature);

    const auto& n = tree_.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_sum(path, depth, i);
        const auto& e = path[i];
        phi_[static_cast<std::size_t>(e.feature)] += w * (e.one_fraction - e.zero_fraction) * n.value;
      }
      return;
    }

    const int hot = tree_.next(node, row_[static_cast<std::size_t>(n.feature)]);
    const int cold = hot == n.left ? n.right : n.left;
    const double hot_zero = tree_.nodes[static_cast<std::size_t>(hot)].cover / n.cover;
    const double cold_zero = tree_.nodes[static_cast<std::size_t>(cold)].cover / n.cover;
    double incoming_zero = 1.0;
    double incoming_one = 1.0;

    // A feature seen higher up is unwound and re-extended with the product
    // of both fractions.
    int k = 0;
    for (; k <= depth; ++k)
      if (path[k].feature == n.feature) break;
    if (k != depth + 1) {
      incoming_zero = path[k].zero_fraction;
      incoming_one = path[k].one_fraction;
      unwind_path(path, depth, k);
      --depth;
    }

    // Subtrees whose path carries no weight either way contribute nothing.
    if (hot_zero * incoming_zero != 0.0 || incoming_one != 0.0)
      recurse(hot, depth + 1, path, hot_zero * incoming_zero, incoming_one, n.feature);
    if (cold_zero * incoming_zero != 0.0)
      recurse(cold, depth + 1, path, cold_zero * incoming_zero, 0.0, n.feature);
  }

  const Tree& tree_;
  std::span<const Value> row_;
  std::vector<double>& phi_;
  std::vector<PathElement> buffer_;
};

// Cover-weighted mean leaf value of a tree.
inline double tree_mean(const Tree& tree) {
  std::vector<double> mean(tree.nodes.size(), 0.0);
  for (std::size_t i = tree.nodes.size(); i-- > 0;) {
    const auto& n = tree.nodes[i];
    if (n.is_leaf) {
      mean[i] = n.value;
    } else {
      const auto l = static_cast<std::size_t>(n.left), r = static_cast<std::size_t>(n.right);
      double s = 0.0;
      if (tree.nodes[l].cover > 0.0) s += tree.nodes[l].cover * mean[l];
      if (tree.nodes[r].cover > 0.0) s += tree.nodes[r].cover * mean[r];
      mean[i] = s / n.cover;
    }
  }
  return mean.front();
}

}  // namespace detail

// Exact path-dependent TreeSHAP, polynomial in tree size and depth.
inline Attribution tree_shap(const TreeEnsemble& model, std::span<const Value> row) {
  learn::check_row(model, row);
  require_covers(model);
  Attribution a;
  a.schema = model.schema;
  a.phi.assign(model.schema.size(), 0.0);
  a.base_value = model.base_margin;
  for (const auto& t : model.trees) {
    a.base_value += detail::tree_mean(t);
    detail::TreeShapWalker(t, row, a.phi).run();
  }
  a.margin = learn::predict_margin(model, row);
  return a;
}

inline Attribution tree_shap(const TreeEnsemble& model, const FeatureVector& x) {
  return tree_shap(model, learn::align(model.schema, x));
}

}  // namespace triad::explain
