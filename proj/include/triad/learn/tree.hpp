#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triad/domain/types.hpp"

namespace triad::learn {

struct TrainConfig {
  int rounds = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  double l2_leaf = 1.0;
  double min_child_cover = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (rounds < 0) throw ConfigError("rounds must be non-negative");
    if (max_depth < 0) throw ConfigError("max_depth must be non-negative");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must lie in (0, 1]");
    if (!(l2_leaf >= 0.0)) throw ConfigError("l2_leaf must be non-negative");
    if (!(min_child_cover >= 0.0)) throw ConfigError("min_child_cover must be non-negative");
  }

  bool operator==(const TrainConfig&) const = default;
};

// One node of a regression tree, stored in a flat array; children always
// have larger indices than their parent and the root is index 0.
struct TreeNode {
  bool is_leaf = true;
  int feature = -1;
  double threshold = 0.0;  // rows with value < threshold go left
  int left = -1;
  int right = -1;
  bool missing_left = true;
  double value = 0.0;  // leaf margin contribution, shrinkage already applied
  double cover = 0.0;  // training rows routed through this node

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  // Child that a value (or a missing value) follows at split node `i`.
  int next(int i, const Value& v) const {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (!v) return n.missing_left ? n.left : n.right;
    return *v < n.threshold ? n.left : n.right;
  }

  int leaf_for(std::span<const Value> row) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf)
      i = next(i, row[static_cast<std::size_t>(nodes[static_cast<std::size_t>(i)].feature)]);
    return i;
  }

  double predict(std::span<const Value> row) const {
    return nodes[static_cast<std::size_t>(leaf_for(row))].value;
  }

  int depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, d[i]);
      if (!nodes[i].is_leaf) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
    }
    return best;
  }

  bool operator==(const Tree&) const = default;
};

struct EnsembleMetadata {
  std::uint64_t seed = 0;
  std::optional<TrainConfig> config;
  std::string train_digest;

  bool operator==(const EnsembleMetadata&) const = default;
};

struct TreeEnsemble {
  std::vector<std::string> schema;
  double base_margin = 0.0;
  double learning_rate = 1.0;
  std::vector<Tree> trees;
  EnsembleMetadata metadata;

  bool operator==(const TreeEnsemble&) const = default;
};

inline double sigmoid(double margin) {
  double p;
  if (margin >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-margin));
  } else {
    const double e = std::exp(margin);
    p = e / (1.0 + e);
  }
  // Keep the probability strictly inside (0, 1) for very large |margin|.
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::clamp(p, lo, hi);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline void check_row(const TreeEnsemble& model, std::span<const Value> row) {
  if (row.size() != model.schema.size())
    throw SchemaMismatch("row has " + std::to_string(row.size()) + " values, model expects " +
                         std::to_string(model.schema.size()));
}

// base_margin + sum over trees, accumulated in tree order.
inline double predict_margin(const TreeEnsemble& model, std::span<const Value> row) {
  check_row(model, row);
  double m = model.base_margin;
  for (const auto& t : model.trees) m += t.predict(row);
  return m;
}

// Reorders a named feature vector into the model's schema order.
inline std::vector<Value> align(const std::vector<std::string>& schema, const FeatureVector& x) {
  if (x.names() == schema) return {x.values().begin(), x.values().end()};
  std::vector<Value> row;
  row.reserve(schema.size());
  for (const auto& name : schema) {
    auto i = x.index_of(name);
    if (!i) throw SchemaMismatch("feature '" + name + "' required by the model is absent");
    row.push_back(x[*i]);
  }
  return row;
}

inline double predict_margin(const TreeEnsemble& model, const FeatureVector& x) {
  return predict_margin(model, align(model.schema, x));
}

inline double predict_proba(const TreeEnsemble& model, std::span<const Value> row) {
  return sigmoid(predict_margin(model, row));
}

inline double predict_proba(const TreeEnsemble& model, const FeatureVector& x) {
  return sigmoid(predict_margin(model, x));
}

}  // namespace triad::learn
