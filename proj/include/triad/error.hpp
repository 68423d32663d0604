#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace triad {

// Base of every error the library raises. `kind()` is a stable identifier
// used by the CLI and the HTTP layer to pick exit codes and status codes.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define TRIAD_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(#Name, what) {}  \
  };

TRIAD_DEFINE_ERROR(ConfigError)
TRIAD_DEFINE_ERROR(DataError)
TRIAD_DEFINE_ERROR(DomainError)
TRIAD_DEFINE_ERROR(SchemaError)
TRIAD_DEFINE_ERROR(SchemaMismatch)
TRIAD_DEFINE_ERROR(FormatError)
TRIAD_DEFINE_ERROR(ScaleFormatError)
TRIAD_DEFINE_ERROR(RuleEvaluationError)
TRIAD_DEFINE_ERROR(CoverMissing)
TRIAD_DEFINE_ERROR(DuplicateId)
TRIAD_DEFINE_ERROR(DanglingParent)
TRIAD_DEFINE_ERROR(InsufficientData)
TRIAD_DEFINE_ERROR(LengthMismatch)

#undef TRIAD_DEFINE_ERROR

// Errors that carry the offending field, item or node.
class MissingMeasurement : public Error {
 public:
  explicit MissingMeasurement(std::string field)
      : Error("MissingMeasurement", field), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class InvalidField : public Error {
 public:
  InvalidField(std::string field, const std::string& what)
      : Error("InvalidField", field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class MissingItemInput : public Error {
 public:
  explicit MissingItemInput(std::string item_id)
      : Error("MissingItemInput", item_id), item_id_(std::move(item_id)) {}
  const std::string& item_id() const noexcept { return item_id_; }

 private:
  std::string item_id_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("ParseError", "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class TooManyFeatures : public Error {
 public:
  explicit TooManyFeatures(std::size_t d)
      : Error("TooManyFeatures", std::to_string(d) + " features; enumeration supports at most 12"),
        count_(d) {}
  std::size_t count() const noexcept { return count_; }

 private:
  std::size_t count_;
};

class RankDeficient : public Error {
 public:
  explicit RankDeficient(std::string node)
      : Error("RankDeficient", "collinear predictors for node " + node), node_(std::move(node)) {}
  const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
};

}  // namespace triad
