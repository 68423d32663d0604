#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "triad/domain/types.hpp"

namespace triad::learn {

struct Metrics {
  std::size_t n = 0;
  double threshold = 0.5;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  // Undefined when the class they condition on is absent.
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> auc;
};

// Mann-Whitney AUC from average ranks; ties between a positive and a
// negative count one half. Undefined unless both classes are present.
inline std::optional<double> auc_rank(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw LengthMismatch("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share their average (i + 1 + j) / 2.
    const double avg = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) {
        pos_rank_sum += avg;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

inline Metrics evaluate_scores(std::span<const double> probs, std::span<const int> labels, double threshold = 0.5) {
  if (probs.size() != labels.size()) throw LengthMismatch("probabilities and labels differ in length");
  if (probs.empty()) throw DataError("cannot evaluate on an empty cohort");
  Metrics m;
  m.n = probs.size();
  m.threshold = threshold;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool predicted = probs[i] >= threshold;
    if (labels[i] == 1) (predicted ? m.tp : m.fn)++;
    else (predicted ? m.fp : m.tn)++;
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.n);
  if (m.tp + m.fn > 0) m.sensitivity = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.tn + m.fp > 0) m.specificity = static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp);
  m.auc = auc_rank(probs, labels);
  return m;
}

// Works for any model with a predict_proba(model, row) overload.
template <class Model>
std::vector<double> predict_all(const Model& model, const CohortDataset& cohort) {
  std::vector<double> p;
  p.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) p.push_back(predict_proba(model, cohort.row(i)));
  return p;
}

template <class Model>
Metrics evaluate(const Model& model, const CohortDataset& cohort, double threshold = 0.5) {
  cohort.validate();
  const auto p = predict_all(model, cohort);
  return evaluate_scores(p, cohort.labels, threshold);
}

// Mean binary cross-entropy; probabilities are clamped away from 0 and 1.
inline double log_loss(std::span<const double> probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) throw LengthMismatch("probabilities and labels differ in length");
  if (probs.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-15, 1.0 - 1e-15);
    s -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return s / static_cast<double>(probs.size());
}

}  // namespace triad::learn
