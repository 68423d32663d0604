#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "triad/error.hpp"

namespace triad {

// A feature cell. Missingness is explicit; a stored double is always finite.
using Value = std::optional<double>;

enum class Sex { M, F };
enum class TriState { No, Yes, Unknown };

inline std::string_view to_string(Sex s) { return s == Sex::M ? "M" : "F"; }

inline std::string_view to_string(TriState t) {
  switch (t) {
    case TriState::No: return "no";
    case TriState::Yes: return "yes";
    case TriState::Unknown: return "unknown";
  }
  return "unknown";
}

inline Sex parse_sex(std::string_view s) {
  if (s == "M" || s == "m" || s == "male") return Sex::M;
  if (s == "F" || s == "f" || s == "female") return Sex::F;
  throw DomainError("sex must be M or F, got '" + std::string(s) + "'");
}

inline TriState parse_tristate(std::string_view s) {
  if (s == "yes" || s == "1" || s == "true") return TriState::Yes;
  if (s == "no" || s == "0" || s == "false") return TriState::No;
  if (s == "unknown" || s.empty() || s == "NA") return TriState::Unknown;
  throw DomainError("tri-state must be yes/no/unknown, got '" + std::string(s) + "'");
}

// Model-facing encoding: no -> 0, yes -> 1, unknown -> missing.
inline Value encode(TriState t) {
  switch (t) {
    case TriState::No: return 0.0;
    case TriState::Yes: return 1.0;
    case TriState::Unknown: return std::nullopt;
  }
  return std::nullopt;
}

struct RawPatient {
  Sex sex = Sex::M;
  int age = 0;
  std::optional<double> height_cm;
  std::optional<double> weight_kg;
  std::optional<double> waist_cm;
  std::optional<double> mean_sbp;
  std::optional<double> mean_dbp;
  TriState ah_therapy = TriState::Unknown;
  TriState physical_activity = TriState::Unknown;
  TriState high_glucose_history = TriState::Unknown;
  TriState dm_heredity = TriState::Unknown;
  TriState daily_vegetables = TriState::Unknown;
  std::string anamnesis;

  bool operator==(const RawPatient&) const = default;
};

// Names the learner sees, in schema order.
inline const std::vector<std::string>& default_schema() {
  static const std::vector<std::string> names{"bmi", "mean_dbp", "age", "mean_sbp", "weight", "bsa"};
  return names;
}

inline constexpr std::string_view kLabelColumn = "t2dm_5y";

class FeatureVector {
 public:
  FeatureVector() = default;

  explicit FeatureVector(std::vector<std::string> names)
      : names_(std::move(names)), values_(names_.size()) {
    check_names();
  }

  FeatureVector(std::vector<std::string> names, std::vector<Value> values)
      : names_(std::move(names)), values_(std::move(values)) {
    if (names_.size() != values_.size())
      throw SchemaError("feature vector has " + std::to_string(names_.size()) + " names but " +
                        std::to_string(values_.size()) + " values");
    check_names();
    for (std::size_t i = 0; i < values_.size(); ++i) check_finite(names_[i], values_[i]);
  }

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::span<const Value> values() const noexcept { return values_; }
  const Value& operator[](std::size_t i) const { return values_.at(i); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
  }
  bool contains(std::string_view name) const { return index_of(name).has_value(); }

  Value get(std::string_view name) const { return values_[require(name)]; }
  bool is_missing(std::string_view name) const { return !get(name).has_value(); }

  void set(std::string_view name, double v) {
    auto i = require(name);
    check_finite(names_[i], v);
    values_[i] = v;
  }
  void set(std::string_view name, Value v) {
    auto i = require(name);
    check_finite(names_[i], v);
    values_[i] = v;
  }
  void set_missing(std::string_view name) { values_[require(name)].reset(); }

  bool operator==(const FeatureVector&) const = default;

 private:
  std::size_t require(std::string_view name) const {
    auto i = index_of(name);
    if (!i) throw SchemaMismatch("feature '" + std::string(name) + "' is not in the schema");
    return *i;
  }

  void check_names() const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      for (std::size_t j = i + 1; j < names_.size(); ++j)
        if (names_[i] == names_[j]) throw SchemaError("duplicate feature '" + names_[i] + "'");
  }

  static void check_finite(const std::string& name, const Value& v) {
    if (v && !std::isfinite(*v))
      throw DomainError("feature '" + name + "' must be finite; use the missing flag instead");
  }

  std::vector<std::string> names_;
  std::vector<Value> values_;
};

struct PatientCase {
  std::string case_id;
  RawPatient raw;
  FeatureVector features;
  std::optional<int> observed_outcome;
};

struct CohortDataset {
  std::vector<std::string> schema;
  std::vector<std::vector<Value>> rows;
  std::vector<int> labels;

  std::size_t size() const noexcept { return rows.size(); }
  std::size_t positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  }
  double prevalence() const {
    return rows.empty() ? 0.0 : static_cast<double>(positives()) / static_cast<double>(rows.size());
  }
  std::span<const Value> row(std::size_t i) const { return rows.at(i); }
  FeatureVector feature_vector(std::size_t i) const { return FeatureVector(schema, rows.at(i)); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    auto it = std::find(schema.begin(), schema.end(), name);
    if (it == schema.end()) return std::nullopt;
    return static_cast<std::size_t>(it - schema.begin());
  }

  CohortDataset subset(std::span<const std::size_t> indices) const {
    CohortDataset out;
    out.schema = schema;
    out.rows.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (auto i : indices) {
      out.rows.push_back(rows.at(i));
      out.labels.push_back(labels.at(i));
    }
    return out;
  }

  // Throws SchemaError unless every row has one cell per schema feature and a 0/1 label.
  void validate() const {
    if (rows.size() != labels.size()) throw SchemaError("row and label counts differ");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != schema.size())
        throw SchemaError("row " + std::to_string(i) + " does not match the schema width");
      if (labels[i] != 0 && labels[i] != 1)
        throw SchemaError("row " + std::to_string(i) + " has a non-binary label");
    }
  }
};

}  // namespace triad
