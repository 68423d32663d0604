#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "triad/domain/features.hpp"
#include "triad/format.hpp"
#include "triad/learn/tree.hpp"
#include "triad/scales/scale.hpp"

namespace triad::pipeline {

// Stage 1 scores a clinical scale, stage 2 predicts with a tree ensemble,
// stage 3 explains the output of a stage-2 parent.
enum class Stage { Scale = 1, Predictor = 2, Explainer = 3 };

inline int stage_number(Stage s) { return static_cast<int>(s); }

inline Stage parse_stage(int s) {
  if (s < 1 || s > 3) throw ConfigError("stage must be 1, 2 or 3, got " + std::to_string(s));
  return static_cast<Stage>(s);
}

// Closed interval; either end may be open.
struct RangeCondition {
  std::string field;
  std::optional<double> min;
  std::optional<double> max;
};

struct Applicability {
  std::vector<std::string> required;
  std::vector<RangeCondition> ranges;
};

struct ApplicabilityResult {
  bool ok = true;
  std::string reason;  // first failing condition
};

struct EntryMetadata {
  std::string name;
  std::string horizon;
  std::string version;
};

struct ModelEntry {
  std::string entry_id;
  Stage stage = Stage::Predictor;
  std::shared_ptr<const scales::ScaleDefinition> scale;  // stage 1
  std::shared_ptr<const learn::TreeEnsemble> model;      // stage 2
  std::string parent;                                    // stage 3
  scales::RiskThresholds thresholds;                     // stage 2 categories
  Applicability applicability;
  EntryMetadata metadata;
};

namespace detail {

inline std::optional<Value> lookup(const PatientCase& c, const std::string& field) {
  if (!is_known_field(c, field)) return std::nullopt;
  return resolve_field(c, field);
}

}  // namespace detail

inline ApplicabilityResult applicable(const ModelEntry& entry, const PatientCase& c) {
  for (const auto& f : entry.applicability.required) {
    auto v = detail::lookup(c, f);
    if (!v || !*v) return {false, "missing: " + f};
  }
  for (const auto& r : entry.applicability.ranges) {
    auto v = detail::lookup(c, r.field);
    if (!v || !*v) return {false, "missing: " + r.field};
    const double x = **v;
    if ((r.min && x < *r.min) || (r.max && x > *r.max)) {
      const std::string lo = r.min ? format_double(*r.min) : "-inf";
      const std::string hi = r.max ? format_double(*r.max) : "inf";
      return {false, "out of range: " + r.field + "=" + format_double(x) + " not in [" + lo + ", " + hi + "]"};
    }
  }
  return {true, ""};
}

// An immutable snapshot of registered entries. Registration returns a new
// snapshot and leaves this one untouched.
class Registry {
 public:
  Registry() : entries_(std::make_shared<const std::vector<ModelEntry>>()) {}

  const std::vector<ModelEntry>& entries() const { return *entries_; }
  std::size_t size() const { return entries_->size(); }

  const ModelEntry* find(std::string_view id) const {
    for (const auto& e : *entries_)
      if (e.entry_id == id) return &e;
    return nullptr;
  }

  Registry with(ModelEntry entry) const {
    if (entry.entry_id.empty()) throw ConfigError("entry_id is empty");
    if (find(entry.entry_id)) throw DuplicateId("entry '" + entry.entry_id + "' is already registered");
    switch (entry.stage) {
      case Stage::Scale:
        if (!entry.scale) throw ConfigError("stage-1 entry '" + entry.entry_id + "' has no scale");
        break;
      case Stage::Predictor:
        if (!entry.model) throw ConfigError("stage-2 entry '" + entry.entry_id + "' has no model");
        break;
      case Stage::Explainer: {
        const auto* parent = find(entry.parent);
        if (!parent || parent->stage != Stage::Predictor)
          throw DanglingParent("entry '" + entry.entry_id + "' references '" + entry.parent +
                               "', which is not a registered stage-2 entry");
        break;
      }
    }
    auto next = std::make_shared<std::vector<ModelEntry>>(*entries_);
    next->push_back(std::move(entry));
    Registry r;
    r.entries_ = std::move(next);
    return r;
  }

 private:
  std::shared_ptr<const std::vector<ModelEntry>> entries_;
};

inline Registry register_model(const Registry& registry, ModelEntry entry) { return registry.with(std::move(entry)); }

}  // namespace triad::pipeline
