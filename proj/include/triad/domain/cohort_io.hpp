#pragma once

#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "triad/domain/features.hpp"
#include "triad/format.hpp"
#include "triad/domain/types.hpp"

namespace triad {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

struct CohortLoadOptions {
  // Features to load, in schema order. Empty means every column other than
  // the label and the known raw/identifier columns.
  std::vector<std::string> schema = default_schema();
  std::string label = std::string(kLabelColumn);
};

// Columns a cohort file may carry beside the learner features.
inline bool is_passthrough_column(std::string_view name) {
  return is_raw_field(name) || name == "case_id" || name == "anamnesis" || name == "bmi_raw";
}

inline CohortDataset load_cohort(std::istream& in, const CohortLoadOptions& options = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw SchemaError("empty document: no header row");

  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  auto header_views = detail::split(line, delim);
  std::vector<std::string> header(header_views.begin(), header_views.end());

  std::set<std::string> seen;
  for (const auto& h : header)
    if (!seen.insert(h).second) throw SchemaError("duplicate column '" + h + "'");

  std::ptrdiff_t label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == options.label) label_col = static_cast<std::ptrdiff_t>(i);
  if (label_col < 0) throw SchemaError("missing label column '" + options.label + "'");

  CohortDataset ds;
  std::vector<std::ptrdiff_t> feature_col;
  if (options.schema.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (static_cast<std::ptrdiff_t>(i) == label_col || is_passthrough_column(header[i])) continue;
      ds.schema.push_back(header[i]);
      feature_col.push_back(static_cast<std::ptrdiff_t>(i));
    }
  } else {
    ds.schema = options.schema;
    for (const auto& name : ds.schema) {
      auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) throw SchemaError("missing feature column '" + name + "'");
      feature_col.push_back(it - header.begin());
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (static_cast<std::ptrdiff_t>(i) == label_col) continue;
      if (std::find(ds.schema.begin(), ds.schema.end(), header[i]) != ds.schema.end()) continue;
      if (!is_passthrough_column(header[i])) throw SchemaError("unknown column '" + header[i] + "'");
    }
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split(line, delim);
    if (cells.size() != header.size())
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " cells, found " +
                                    std::to_string(cells.size()));
    std::vector<Value> row;
    row.reserve(feature_col.size());
    for (std::size_t f = 0; f < feature_col.size(); ++f) {
      auto cell = cells[static_cast<std::size_t>(feature_col[f])];
      if (cell.empty() || cell == "NA") {
        row.emplace_back(std::nullopt);
        continue;
      }
      auto v = parse_double(cell);
      if (!v || !std::isfinite(*v))
        throw ParseError(line_no, "non-numeric value '" + std::string(cell) + "' in column '" + ds.schema[f] + "'");
      row.emplace_back(*v);
    }
    auto label_cell = cells[static_cast<std::size_t>(label_col)];
    int label = 0;
    if (label_cell == "1") label = 1;
    else if (label_cell == "0") label = 0;
    else throw ParseError(line_no, "label must be 0 or 1, got '" + std::string(label_cell) + "'");
    ds.rows.push_back(std::move(row));
    ds.labels.push_back(label);
  }
  return ds;
}

inline CohortDataset load_cohort_text(std::string_view text, const CohortLoadOptions& options = {}) {
  std::istringstream in{std::string(text)};
  return load_cohort(in, options);
}

inline void write_cohort(std::ostream& out, const CohortDataset& ds, std::string_view label = kLabelColumn) {
  for (const auto& name : ds.schema) out << name << ',';
  out << label << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (const auto& v : ds.rows[i]) out << (v ? format_double(*v) : std::string("NA")) << ',';
    out << ds.labels[i] << '\n';
  }
}

inline std::string cohort_to_string(const CohortDataset& ds) {
  std::ostringstream out;
  write_cohort(out, ds);
  return out.str();
}

}  // namespace triad
