#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triad/domain/features.hpp"
#include "triad/domain/types.hpp"

namespace triad::scales {

using json = nlohmann::json;

enum class RuleOp { Lt, Le, Gt, Ge, Eq, InRange };
enum class RuleAction { Include, Exclude, Flag };

// A guideline-derived predicate on one field. `include` keeps rows where the
// predicate holds, `exclude` drops them, `flag` only logs them. A missing
// cell takes `default_value` when declared.
struct GuidelineRule {
  std::string rule_id;
  std::string field;
  RuleOp op = RuleOp::Eq;
  double value = 0.0;
  double upper = 0.0;  // in_range only; range is closed [value, upper]
  RuleAction action = RuleAction::Include;
  std::optional<double> default_value;

  bool test(double v) const {
    switch (op) {
      case RuleOp::Lt: return v < value;
      case RuleOp::Le: return v <= value;
      case RuleOp::Gt: return v > value;
      case RuleOp::Ge: return v >= value;
      case RuleOp::Eq: return v == value;
      case RuleOp::InRange: return v >= value && v <= upper;
    }
    return false;
  }

  bool test(const Value& v) const {
    if (v) return test(*v);
    if (default_value) return test(*default_value);
    throw RuleEvaluationError("rule '" + rule_id + "': field '" + field + "' is missing and has no default");
  }
};

inline RuleOp parse_rule_op(std::string_view s) {
  if (s == "lt") return RuleOp::Lt;
  if (s == "le") return RuleOp::Le;
  if (s == "gt") return RuleOp::Gt;
  if (s == "ge") return RuleOp::Ge;
  if (s == "eq") return RuleOp::Eq;
  if (s == "in_range") return RuleOp::InRange;
  throw FormatError("unknown rule op '" + std::string(s) + "'");
}

inline RuleAction parse_rule_action(std::string_view s) {
  if (s == "include") return RuleAction::Include;
  if (s == "exclude") return RuleAction::Exclude;
  if (s == "flag") return RuleAction::Flag;
  throw FormatError("unknown rule action '" + std::string(s) + "'");
}

inline std::vector<GuidelineRule> load_rules(const json& doc) {
  std::vector<GuidelineRule> rules;
  try {
    for (const auto& r : doc.at("rules")) {
      GuidelineRule rule;
      rule.rule_id = r.at("rule_id").get<std::string>();
      rule.field = r.at("field").get<std::string>();
      rule.op = parse_rule_op(r.at("op").get<std::string>());
      if (rule.op == RuleOp::InRange) {
        const auto& vs = r.at("values");
        if (!vs.is_array() || vs.size() != 2) throw FormatError("rule '" + rule.rule_id + "': in_range needs two values");
        rule.value = vs.at(0).get<double>();
        rule.upper = vs.at(1).get<double>();
      } else {
        rule.value = r.at("value").get<double>();
      }
      rule.action = parse_rule_action(r.value("action", std::string("include")));
      if (r.contains("default")) rule.default_value = r.at("default").get<double>();
      rules.push_back(std::move(rule));
    }
  } catch (const json::exception& e) {
    throw FormatError(e.what());
  }
  return rules;
}

struct RuleHit {
  std::size_t row = 0;
  std::string rule_id;
  bool operator==(const RuleHit&) const = default;
};

struct FilterResult {
  CohortDataset kept;
  std::vector<std::size_t> kept_rows;  // indices into the input cohort
  std::vector<RuleHit> exclusions;
  std::vector<RuleHit> flags;
};

inline FilterResult filter_cohort(const std::vector<GuidelineRule>& rules, const CohortDataset& cohort) {
  std::vector<std::size_t> column(rules.size());
  for (std::size_t r = 0; r < rules.size(); ++r) {
    auto idx = cohort.index_of(rules[r].field);
    if (!idx) throw RuleEvaluationError("rule '" + rules[r].rule_id + "' references absent field '" + rules[r].field + "'");
    column[r] = *idx;
  }
  FilterResult out;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    bool keep = true;
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const auto& rule = rules[r];
      const bool holds = rule.test(cohort.rows[i][column[r]]);
      switch (rule.action) {
        case RuleAction::Include:
          if (!holds) {
            keep = false;
            out.exclusions.push_back({i, rule.rule_id});
          }
          break;
        case RuleAction::Exclude:
          if (holds) {
            keep = false;
            out.exclusions.push_back({i, rule.rule_id});
          }
          break;
        case RuleAction::Flag:
          if (holds) out.flags.push_back({i, rule.rule_id});
          break;
      }
    }
    if (keep) out.kept_rows.push_back(i);
  }
  out.kept = cohort.subset(out.kept_rows);
  return out;
}

// Whether a single case passes every include/exclude rule.
inline bool passes(const std::vector<GuidelineRule>& rules, const PatientCase& c) {
  for (const auto& rule : rules) {
    if (!is_known_field(c, rule.field))
      throw RuleEvaluationError("rule '" + rule.rule_id + "' references absent field '" + rule.field + "'");
    const bool holds = rule.test(resolve_field(c, rule.field));
    if (rule.action == RuleAction::Include && !holds) return false;
    if (rule.action == RuleAction::Exclude && holds) return false;
  }
  return true;
}

}  // namespace triad::scales
