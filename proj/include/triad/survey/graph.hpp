#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "triad/survey/mi.hpp"
#include "triad/survey/records.hpp"

namespace triad::survey {

using json = nlohmann::json;

struct Edge {
  std::string from;
  std::string to;
  double mi = 0.0;
  std::optional<double> coefficient;
};

struct UndirectedPair {
  std::string a;
  std::string b;
  double mi = 0.0;
};

struct NodeFit {
  std::string node;
  double intercept = 0.0;
  std::size_t n = 0;
};

struct DependencyGraph {
  std::vector<std::string> nodes;
  double threshold = 0.03;
  std::vector<Edge> edges;
  std::vector<UndirectedPair> undirected;  // context pairs; not regressed
  std::vector<NodeFit> fits;

  const Edge* find_edge(std::string_view from, std::string_view to) const {
    for (const auto& e : edges)
      if (e.from == from && e.to == to) return &e;
    return nullptr;
  }

  std::vector<const Edge*> inbound(std::string_view node) const {
    std::vector<const Edge*> out;
    for (const auto& e : edges)
      if (e.to == node) out.push_back(&e);
    return out;
  }
};

// Position among agree, understand, use; nullopt for context variables.
inline std::optional<std::size_t> scoring_rank(std::string_view name) {
  const auto& s = scoring_variables();
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] == name) return i;
  return std::nullopt;
}

inline DependencyGraph build_graph(const AnalysisTable& table, double threshold = 0.03) {
  if (table.size() == 0) throw InsufficientData("empty analysis table");
  DependencyGraph g;
  g.nodes = table.columns;
  g.threshold = threshold;
  std::vector<std::vector<double>> cols;
  for (const auto& c : table.columns) cols.push_back(table.column(c));
  for (std::size_t i = 0; i < cols.size(); ++i)
    for (std::size_t j = i + 1; j < cols.size(); ++j) {
      const double mi = mutual_information(cols[i], cols[j]);
      if (!(mi > threshold)) continue;
      const auto& a = table.columns[i];
      const auto& b = table.columns[j];
      const auto ra = scoring_rank(a), rb = scoring_rank(b);
      if (!ra && !rb) g.undirected.push_back({a, b, mi});
      else if (!ra) g.edges.push_back({a, b, mi, std::nullopt});
      else if (!rb) g.edges.push_back({b, a, mi, std::nullopt});
      else if (*ra < *rb) g.edges.push_back({a, b, mi, std::nullopt});
      else g.edges.push_back({b, a, mi, std::nullopt});
    }
  return g;
}

struct OlsFit {
  double intercept = 0.0;
  std::vector<double> weights;
};

// Least squares with intercept. `node` names the regressed variable in errors.
inline OlsFit ols(const std::vector<std::vector<double>>& predictors, const std::vector<double>& y,
                  const std::string& node) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto p = static_cast<Eigen::Index>(predictors.size());
  if (n <= p + 1)
    throw InsufficientData("node " + node + " has " + std::to_string(n) + " rows for " + std::to_string(p) +
                           " predictors");
  Eigen::MatrixXd X(n, p + 1);
  Eigen::VectorXd Y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    X(r, 0) = 1.0;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (predictors[k].size() != y.size()) throw LengthMismatch("predictor column length for node " + node);
      X(r, k + 1) = predictors[k][r];
    }
    Y(r) = y[r];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p + 1) throw RankDeficient(node);
  const Eigen::VectorXd beta = qr.solve(Y);
  OlsFit fit;
  fit.intercept = beta(0);
  for (Eigen::Index k = 0; k < p; ++k) fit.weights.push_back(beta(k + 1));
  return fit;
}

// One regression per node with inbound edges; each edge gets its
// predictor's fitted weight.
inline DependencyGraph fit_edge_regressions(DependencyGraph g, const AnalysisTable& table) {
  g.fits.clear();
  for (const auto& node : g.nodes) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < g.edges.size(); ++i)
      if (g.edges[i].to == node) in.push_back(i);
    if (in.empty()) continue;
    std::vector<std::vector<double>> xs;
    for (auto i : in) xs.push_back(table.column(g.edges[i].from));
    const auto fit = ols(xs, table.column(node), node);
    for (std::size_t k = 0; k < in.size(); ++k) g.edges[in[k]].coefficient = fit.weights[k];
    g.fits.push_back({node, fit.intercept, table.size()});
  }
  return g;
}

inline json to_json(const DependencyGraph& g) {
  json edges = json::array(), und = json::array(), fits = json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"from", e.from},
                     {"to", e.to},
                     {"mi", e.mi},
                     {"coef", e.coefficient ? json(*e.coefficient) : json(nullptr)}});
  for (const auto& u : g.undirected) und.push_back({{"a", u.a}, {"b", u.b}, {"mi", u.mi}});
  for (const auto& f : g.fits) fits.push_back({{"node", f.node}, {"intercept", f.intercept}, {"n", f.n}});
  return {{"nodes", g.nodes}, {"threshold", g.threshold}, {"edges", edges}, {"undirected", und}, {"fits", fits}};
}

// Plain-text listing, one edge per line.
inline std::string to_text(const DependencyGraph& g) {
  std::string out;
  char buf[160];
  for (const auto& e : g.edges) {
    if (e.coefficient)
      std::snprintf(buf, sizeof buf, "%s -> %s  mi=%.4f  coef=%.4f\n", e.from.c_str(), e.to.c_str(), e.mi, *e.coefficient);
    else
      std::snprintf(buf, sizeof buf, "%s -> %s  mi=%.4f\n", e.from.c_str(), e.to.c_str(), e.mi);
    out += buf;
  }
  for (const auto& u : g.undirected) {
    std::snprintf(buf, sizeof buf, "%s -- %s  mi=%.4f\n", u.a.c_str(), u.b.c_str(), u.mi);
    out += buf;
  }
  return out;
}

}  // namespace triad::survey
