#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "triad/learn/model_io.hpp"
#include "triad/pipeline/registry.hpp"

namespace triad::pipeline {

using json = nlohmann::json;

inline Applicability applicability_from_json(const json& j) {
  Applicability a;
  if (j.is_null()) return a;
  if (j.contains("requires")) a.required = j.at("requires").get<std::vector<std::string>>();
  if (j.contains("ranges"))
    for (const auto& r : j.at("ranges")) {
      RangeCondition c;
      c.field = r.at("field").get<std::string>();
      if (r.contains("min") && !r.at("min").is_null()) c.min = r.at("min").get<double>();
      if (r.contains("max") && !r.at("max").is_null()) c.max = r.at("max").get<double>();
      a.ranges.push_back(std::move(c));
    }
  return a;
}

inline json to_json(const Applicability& a) {
  json ranges = json::array();
  for (const auto& r : a.ranges) {
    json jr = {{"field", r.field}};
    jr["min"] = r.min ? json(*r.min) : json(nullptr);
    jr["max"] = r.max ? json(*r.max) : json(nullptr);
    ranges.push_back(jr);
  }
  return {{"requires", a.required}, {"ranges", ranges}};
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// {"entries": [{"entry_id", "stage", "artifact"?, "parent"?, "name"?, "horizon"?,
//   "version"?, "thresholds"?: {"low_mid","mid_hi"}, "applicability"?: {...}}]}
// Artifact paths are relative to the manifest's directory. Entries register
// in document order.
inline Registry load_manifest(const json& doc, const std::filesystem::path& base_dir) {
  Registry reg;
  std::string where = "manifest";
  try {
    const auto& entries = doc.at("entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& j = entries.at(i);
      where = "entries[" + std::to_string(i) + "]";
      ModelEntry e;
      e.entry_id = j.at("entry_id").get<std::string>();
      e.stage = parse_stage(j.at("stage").get<int>());
      e.metadata.name = j.value("name", e.entry_id);
      e.metadata.horizon = j.value("horizon", std::string());
      e.metadata.version = j.value("version", std::string());
      if (j.contains("applicability")) e.applicability = applicability_from_json(j.at("applicability"));
      auto artifact = [&] { return base_dir / j.at("artifact").get<std::string>(); };
      switch (e.stage) {
        case Stage::Scale:
          e.scale = std::make_shared<const scales::ScaleDefinition>(scales::load_scale_text(read_text(artifact())));
          break;
        case Stage::Predictor:
          e.model = std::make_shared<const learn::TreeEnsemble>(learn::load_model(artifact().string()));
          if (j.contains("thresholds")) {
            e.thresholds.low_mid = j.at("thresholds").value("low_mid", e.thresholds.low_mid);
            e.thresholds.mid_hi = j.at("thresholds").value("mid_hi", e.thresholds.mid_hi);
          }
          break;
        case Stage::Explainer:
          e.parent = j.at("parent").get<std::string>();
          break;
      }
      reg = reg.with(std::move(e));
    }
  } catch (const json::exception& e) {
    throw FormatError(where + ": " + e.what());
  } catch (const ScaleFormatError& e) {
    throw FormatError(where + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(where + ": " + e.what());
  }
  return reg;
}

inline Registry load_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return load_manifest(doc, path.parent_path());
}

}  // namespace triad::pipeline
