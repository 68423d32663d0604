#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "triad/domain/features.hpp"
#include "triad/domain/types.hpp"
#include "triad/format.hpp"

namespace triad::scales {

using json = nlohmann::json;

enum class RiskCategory { Low = 0, Mid = 1, Hi = 2 };

inline std::string_view to_string(RiskCategory c) {
  switch (c) {
    case RiskCategory::Low: return "low";
    case RiskCategory::Mid: return "mid";
    case RiskCategory::Hi: return "hi";
  }
  return "low";
}

inline RiskCategory parse_risk_category(std::string_view s) {
  if (s == "low") return RiskCategory::Low;
  if (s == "mid") return RiskCategory::Mid;
  if (s == "hi") return RiskCategory::Hi;
  throw DomainError("risk category must be low, mid or hi, got '" + std::string(s) + "'");
}

struct RiskThresholds {
  double low_mid = 0.20;
  double mid_hi = 0.50;
};

// low if p < low_mid, mid if low_mid <= p < mid_hi, hi otherwise.
inline RiskCategory categorize_risk(double p, RiskThresholds t = {}) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability outside [0, 1]");
  if (!(t.low_mid > 0.0 && t.low_mid < t.mid_hi && t.mid_hi < 1.0))
    throw DomainError("thresholds must satisfy 0 < low_mid < mid_hi < 1");
  if (p < t.low_mid) return RiskCategory::Low;
  if (p < t.mid_hi) return RiskCategory::Mid;
  return RiskCategory::Hi;
}

enum class MissingPolicy { ZeroPoints, Reject };

// A bin is either a half-open interval [min, max) with open ends allowed,
// or an exact match. An optional sex qualifier restricts it to one sex.
struct Bin {
  std::optional<double> min;
  std::optional<double> max;
  std::optional<double> equals;
  std::optional<Sex> sex;
  int points = 0;

  bool applies_to(Sex s) const { return !sex || *sex == s; }

  bool matches(double v) const {
    if (equals) return v == *equals;
    return (!min || v >= *min) && (!max || v < *max);
  }

  double lo() const { return equals ? *equals : min.value_or(-std::numeric_limits<double>::infinity()); }
  double hi() const { return equals ? *equals : max.value_or(std::numeric_limits<double>::infinity()); }
};

inline bool bins_overlap(const Bin& a, const Bin& b) {
  if (a.sex && b.sex && *a.sex != *b.sex) return false;
  if (a.equals && b.equals) return *a.equals == *b.equals;
  if (a.equals) return b.matches(*a.equals);
  if (b.equals) return a.matches(*b.equals);
  return std::max(a.lo(), b.lo()) < std::min(a.hi(), b.hi());
}

struct ScaleItem {
  std::string item_id;
  std::string source;
  std::vector<Bin> bins;
  MissingPolicy missing_policy = MissingPolicy::Reject;

  int max_points() const {
    int m = 0;
    for (const auto& b : bins) m = std::max(m, b.points);
    return m;
  }
};

struct RiskBand {
  int min_points = 0;
  int max_points = 0;  // inclusive
  double probability = 0.0;
  std::string category;
};

struct ScaleDefinition {
  std::string scale_id;
  std::vector<ScaleItem> items;
  std::vector<RiskBand> risk_map;  // sorted by min_points after load
  double horizon_years = 0.0;

  int max_total() const {
    int t = 0;
    for (const auto& i : items) t += i.max_points();
    return t;
  }
};

struct ScaleResult {
  std::string scale_id;
  int total_points = 0;
  std::vector<std::pair<std::string, int>> per_item_points;
  double probability = 0.0;
  double horizon_years = 0.0;
  std::string category;

  bool operator==(const ScaleResult&) const = default;
};

// Tri-state questionnaire answers default to zero points when absent;
// measured inputs must be present.
inline MissingPolicy default_missing_policy(std::string_view source) {
  static const std::vector<std::string_view> survey{"ah_therapy", "physical_activity", "high_glucose_history",
                                                    "dm_heredity", "daily_vegetables"};
  return std::find(survey.begin(), survey.end(), source) != survey.end() ? MissingPolicy::ZeroPoints
                                                                         : MissingPolicy::Reject;
}

// Throws ScaleFormatError on any violated invariant; sorts the risk map.
inline void validate(ScaleDefinition& def) {
  if (def.scale_id.empty()) throw ScaleFormatError("scale_id is empty");
  if (def.items.empty()) throw ScaleFormatError("scale has no items");
  for (std::size_t i = 0; i < def.items.size(); ++i) {
    const auto& item = def.items[i];
    if (item.item_id.empty()) throw ScaleFormatError("item " + std::to_string(i) + " has no item_id");
    for (std::size_t j = 0; j < i; ++j)
      if (def.items[j].item_id == item.item_id) throw ScaleFormatError("duplicate item '" + item.item_id + "'");
    const bool known = is_raw_field(item.source) ||
                       std::find(default_schema().begin(), default_schema().end(), item.source) !=
                           default_schema().end();
    if (!known) throw ScaleFormatError("item '" + item.item_id + "' has unknown source '" + item.source + "'");
    if (item.bins.empty()) throw ScaleFormatError("item '" + item.item_id + "' has no bins");
    for (std::size_t a = 0; a < item.bins.size(); ++a) {
      const auto& b = item.bins[a];
      if (b.points < 0) throw ScaleFormatError("item '" + item.item_id + "' has negative points");
      if (!b.equals && b.min && b.max && !(*b.min < *b.max))
        throw ScaleFormatError("item '" + item.item_id + "' has an empty bin");
      for (std::size_t c = 0; c < a; ++c)
        if (bins_overlap(item.bins[a], item.bins[c])) {
          std::string where = b.equals ? format_double(*b.equals) : format_double(std::max(b.lo(), item.bins[c].lo()));
          throw ScaleFormatError("item '" + item.item_id + "' has overlapping bins at " + where);
        }
    }
  }
  if (def.risk_map.empty()) throw ScaleFormatError("risk_map is empty");
  std::sort(def.risk_map.begin(), def.risk_map.end(),
            [](const RiskBand& a, const RiskBand& b) { return a.min_points < b.min_points; });
  int expected = 0;
  for (const auto& band : def.risk_map) {
    if (band.max_points < band.min_points) throw ScaleFormatError("risk band with max_points < min_points");
    if (band.min_points > expected)
      throw ScaleFormatError("risk_map gap at " + std::to_string(expected) + " points");
    if (band.min_points < expected)
      throw ScaleFormatError("risk_map overlap at " + std::to_string(band.min_points) + " points");
    if (!(band.probability >= 0.0 && band.probability <= 1.0))
      throw ScaleFormatError("risk band probability outside [0, 1]");
    expected = band.max_points + 1;
  }
  if (expected - 1 != def.max_total())
    throw ScaleFormatError("risk_map covers 0.." + std::to_string(expected - 1) + " but totals reach " +
                           std::to_string(def.max_total()));
}

inline ScaleDefinition load_scale(const json& doc) {
  try {
    ScaleDefinition def;
    def.scale_id = doc.at("scale_id").get<std::string>();
    def.horizon_years = doc.at("horizon_years").get<double>();
    for (const auto& it : doc.at("items")) {
      ScaleItem item;
      item.source = it.at("source").get<std::string>();
      item.item_id = it.value("item_id", item.source);
      item.missing_policy = default_missing_policy(item.source);
      if (it.contains("missing_policy")) {
        auto p = it.at("missing_policy").get<std::string>();
        if (p == "zero_points") item.missing_policy = MissingPolicy::ZeroPoints;
        else if (p == "reject") item.missing_policy = MissingPolicy::Reject;
        else throw ScaleFormatError("unknown missing_policy '" + p + "'");
      }
      for (const auto& b : it.at("bins")) {
        Bin bin;
        bin.points = b.at("points").get<int>();
        if (b.contains("equals")) bin.equals = b.at("equals").get<double>();
        if (b.contains("min") && !b.at("min").is_null()) bin.min = b.at("min").get<double>();
        if (b.contains("max") && !b.at("max").is_null()) bin.max = b.at("max").get<double>();
        if (b.contains("sex")) bin.sex = parse_sex(b.at("sex").get<std::string>());
        if (bin.equals && (bin.min || bin.max))
          throw ScaleFormatError("bin mixes 'equals' with 'min'/'max' in item '" + item.item_id + "'");
        item.bins.push_back(bin);
      }
      def.items.push_back(std::move(item));
    }
    for (const auto& r : doc.at("risk_map")) {
      RiskBand band;
      band.min_points = r.at("min_points").get<int>();
      band.max_points = r.at("max_points").get<int>();
      band.probability = r.at("probability").get<double>();
      band.category = r.at("category").get<std::string>();
      def.risk_map.push_back(std::move(band));
    }
    validate(def);
    return def;
  } catch (const json::exception& e) {
    throw ScaleFormatError(e.what());
  } catch (const DomainError& e) {
    throw ScaleFormatError(e.what());
  }
}

inline ScaleDefinition load_scale_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScaleFormatError(e.what());
  }
  return load_scale(doc);
}

inline json to_json(const ScaleDefinition& def) {
  json items = json::array();
  for (const auto& item : def.items) {
    json bins = json::array();
    for (const auto& b : item.bins) {
      json jb;
      if (b.equals) jb["equals"] = *b.equals;
      if (b.min) jb["min"] = *b.min;
      if (b.max) jb["max"] = *b.max;
      if (b.sex) jb["sex"] = std::string(triad::to_string(*b.sex));
      jb["points"] = b.points;
      bins.push_back(jb);
    }
    items.push_back({{"item_id", item.item_id},
                     {"source", item.source},
                     {"missing_policy", item.missing_policy == MissingPolicy::Reject ? "reject" : "zero_points"},
                     {"bins", bins}});
  }
  json risk = json::array();
  for (const auto& r : def.risk_map)
    risk.push_back({{"min_points", r.min_points},
                    {"max_points", r.max_points},
                    {"probability", r.probability},
                    {"category", r.category}});
  return {{"scale_id", def.scale_id}, {"horizon_years", def.horizon_years}, {"items", items}, {"risk_map", risk}};
}

inline const RiskBand& band_for(const ScaleDefinition& def, int total) {
  for (const auto& band : def.risk_map)
    if (total >= band.min_points && total <= band.max_points) return band;
  throw DomainError("total " + std::to_string(total) + " outside the risk map");
}

inline ScaleResult evaluate_scale(const ScaleDefinition& def, const PatientCase& c) {
  ScaleResult result;
  result.scale_id = def.scale_id;
  result.horizon_years = def.horizon_years;
  for (const auto& item : def.items) {
    const Value v = resolve_field(c, item.source);
    int points = 0;
    if (!v) {
      if (item.missing_policy == MissingPolicy::Reject) throw MissingItemInput(item.item_id);
    } else {
      const Bin* hit = nullptr;
      for (const auto& b : item.bins)
        if (b.applies_to(c.raw.sex) && b.matches(*v)) {
          hit = &b;
          break;
        }
      if (!hit)
        throw DomainError("value " + format_double(*v) + " matches no bin of item '" + item.item_id + "'");
      points = hit->points;
    }
    result.per_item_points.emplace_back(item.item_id, points);
    result.total_points += points;
  }
  const auto& band = band_for(def, result.total_points);
  result.probability = band.probability;
  result.category = band.category;
  return result;
}

inline json to_json(const ScaleResult& r) {
  json items = json::object();
  for (const auto& [id, pts] : r.per_item_points) items[id] = pts;
  return {{"scale_id", r.scale_id},
          {"total_points", r.total_points},
          {"per_item_points", items},
          {"probability", r.probability},
          {"horizon_years", r.horizon_years},
          {"category", r.category}};
}

}  // namespace triad::scales
