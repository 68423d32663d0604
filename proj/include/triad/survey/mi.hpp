#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "triad/error.hpp"

namespace triad::survey {

namespace detail {

// Terms are summed in sorted order so equal term sets give equal sums.
inline double sorted_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace detail

// Plug-in entropy in nats.
inline double entropy(std::span<const double> x) {
  if (x.empty()) throw InsufficientData("entropy of an empty series");
  std::map<double, std::int64_t> counts;
  for (double v : x) ++counts[v];
  const auto n = static_cast<double>(x.size());
  std::vector<double> terms;
  for (const auto& [v, c] : counts) terms.push_back(static_cast<double>(c) / n * std::log(n / static_cast<double>(c)));
  return detail::sorted_sum(std::move(terms));
}

// Plug-in mutual information in nats over the empirical joint distribution.
inline double mutual_information(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw LengthMismatch("series lengths " + std::to_string(x.size()) + " and " + std::to_string(y.size()));
  if (x.size() < 2) throw InsufficientData("mutual information needs at least 2 observations");
  std::map<double, std::int64_t> cx, cy;
  std::map<std::pair<double, double>, std::int64_t> cxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++cx[x[i]];
    ++cy[y[i]];
    ++cxy[{x[i], y[i]}];
  }
  const auto n = static_cast<std::int64_t>(x.size());
  std::vector<double> terms;
  terms.reserve(cxy.size());
  for (const auto& [ab, c] : cxy) {
    // integer products stay exact in double for any realistic n
    const double ratio = static_cast<double>(c * n) / static_cast<double>(cx[ab.first] * cy[ab.second]);
    terms.push_back(static_cast<double>(c) / static_cast<double>(n) * std::log(ratio));
  }
  return std::max(0.0, detail::sorted_sum(std::move(terms)));
}

}  // namespace triad::survey
