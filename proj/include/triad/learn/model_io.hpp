#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "triad/learn/tree.hpp"

namespace triad::learn {

using json = nlohmann::json;

inline constexpr int kModelFormatVersion = 1;

inline json to_json(const TrainConfig& c) {
  return {{"rounds", c.rounds},
          {"max_depth", c.max_depth},
          {"learning_rate", c.learning_rate},
          {"l2_leaf", c.l2_leaf},
          {"min_child_cover", c.min_child_cover},
          {"seed", c.seed}};
}

// Missing keys keep their defaults.
inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    c.rounds = j.value("rounds", c.rounds);
    c.max_depth = j.value("max_depth", c.max_depth);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.l2_leaf = j.value("l2_leaf", c.l2_leaf);
    c.min_child_cover = j.value("min_child_cover", c.min_child_cover);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

inline json to_json(const TreeEnsemble& m) {
  json trees = json::array();
  for (const auto& t : m.trees) {
    json nodes = json::array();
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const auto& n = t.nodes[i];
      json jn;
      jn["id"] = i;
      if (n.is_leaf) {
        jn["kind"] = "leaf";
        jn["value"] = n.value;
      } else {
        jn["kind"] = "split";
        jn["feature"] = n.feature;
        jn["threshold"] = n.threshold;
        jn["left"] = n.left;
        jn["right"] = n.right;
        jn["missing_goes"] = n.missing_left ? "left" : "right";
      }
      jn["cover"] = n.cover;
      nodes.push_back(std::move(jn));
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  json meta = {{"seed", m.metadata.seed}, {"train_digest", m.metadata.train_digest}};
  meta["config"] = m.metadata.config ? to_json(*m.metadata.config) : json(nullptr);
  return {{"format_version", kModelFormatVersion},
          {"schema", m.schema},
          {"base_margin", m.base_margin},
          {"learning_rate", m.learning_rate},
          {"trees", std::move(trees)},
          {"metadata", std::move(meta)}};
}

namespace detail {

inline std::string node_path(std::size_t t, std::size_t i) {
  return "trees[" + std::to_string(t) + "].nodes[" + std::to_string(i) + "]";
}

}  // namespace detail

// Parses and validates a model document. Every structural problem raises
// FormatError naming the offending location.
inline TreeEnsemble ensemble_from_json(const json& doc) {
  TreeEnsemble m;
  std::string where = "document";
  try {
    where = "format_version";
    if (doc.at("format_version").get<int>() != kModelFormatVersion)
      throw FormatError("format_version: unsupported version " + doc.at("format_version").dump());
    where = "schema";
    m.schema = doc.at("schema").get<std::vector<std::string>>();
    where = "base_margin";
    m.base_margin = doc.at("base_margin").get<double>();
    where = "learning_rate";
    m.learning_rate = doc.value("learning_rate", 1.0);
    const auto& trees = doc.at("trees");
    for (std::size_t t = 0; t < trees.size(); ++t) {
      Tree tree;
      const auto& nodes = trees.at(t).at("nodes");
      if (nodes.empty()) throw FormatError("trees[" + std::to_string(t) + "]: tree has no nodes");
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        where = detail::node_path(t, i);
        const auto& jn = nodes.at(i);
        if (jn.contains("id") && jn.at("id").get<std::size_t>() != i)
          throw FormatError(where + ": id " + jn.at("id").dump() + " does not match its position");
        TreeNode n;
        const auto kind = jn.at("kind").get<std::string>();
        n.cover = jn.contains("cover") && !jn.at("cover").is_null() ? jn.at("cover").get<double>() : 0.0;
        if (kind == "leaf") {
          n.is_leaf = true;
          n.value = jn.at("value").get<double>();
        } else if (kind == "split") {
          n.is_leaf = false;
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
          const auto mg = jn.value("missing_goes", std::string("left"));
          if (mg != "left" && mg != "right") throw FormatError(where + ": missing_goes must be left or right");
          n.missing_left = mg == "left";
        } else {
          throw FormatError(where + ": unknown node kind '" + kind + "'");
        }
        tree.nodes.push_back(n);
      }
      m.trees.push_back(std::move(tree));
    }
    where = "metadata";
    if (doc.contains("metadata")) {
      const auto& meta = doc.at("metadata");
      m.metadata.seed = meta.value("seed", std::uint64_t{0});
      m.metadata.train_digest = meta.value("train_digest", std::string());
      if (meta.contains("config") && !meta.at("config").is_null())
        m.metadata.config = train_config_from_json(meta.at("config"));
    }
  } catch (const json::exception& e) {
    throw FormatError(where + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(where + ": " + e.what());
  }

  // Structure: children in range, after their parent, each node reached once;
  // parent cover equals the sum of its children.
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    const auto& nodes = m.trees[t].nodes;
    std::vector<int> parents(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      const auto path = detail::node_path(t, i);
      if (!std::isfinite(n.cover) || n.cover < 0.0) throw FormatError(path + ": cover must be finite and >= 0");
      if (n.is_leaf) {
        if (!std::isfinite(n.value)) throw FormatError(path + ": leaf value must be finite");
        continue;
      }
      if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= m.schema.size())
        throw FormatError(path + ": feature index " + std::to_string(n.feature) + " outside the schema");
      if (!std::isfinite(n.threshold)) throw FormatError(path + ": threshold must be finite");
      for (int child : {n.left, n.right}) {
        if (child < 0 || static_cast<std::size_t>(child) >= nodes.size())
          throw FormatError(path + ": dangling child index " + std::to_string(child));
        if (static_cast<std::size_t>(child) <= i)
          throw FormatError(path + ": child index " + std::to_string(child) + " does not follow its parent");
        ++parents[static_cast<std::size_t>(child)];
      }
      if (n.left == n.right) throw FormatError(path + ": left and right children coincide");
      const double sum = nodes[static_cast<std::size_t>(n.left)].cover + nodes[static_cast<std::size_t>(n.right)].cover;
      if (n.cover != sum)
        throw FormatError(path + ": cover " + json(n.cover).dump() + " differs from children sum " + json(sum).dump());
    }
    for (std::size_t i = 1; i < nodes.size(); ++i)
      if (parents[i] != 1)
        throw FormatError(detail::node_path(t, i) + ": node is reached from " + std::to_string(parents[i]) + " parents");
  }
  return m;
}

inline std::string serialize_model(const TreeEnsemble& m) { return to_json(m).dump(2) + "\n"; }

inline TreeEnsemble parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("document: ") + e.what());
  }
  return ensemble_from_json(doc);
}

inline void save_model(const TreeEnsemble& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << serialize_model(m);
  if (!out) throw FormatError("failed writing '" + path + "'");
}

inline TreeEnsemble load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace triad::learn
