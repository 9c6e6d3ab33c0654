#pragma once

#include <stdexcept>
#include <string>

namespace occface {

/// Broad failure classes. The numeric values double as CLI exit codes.
enum class ErrorCategory : int {
  kValidation = 2,
  kIo = 3,
  kNumerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string kind, const std::string& message)
      : std::runtime_error(message), category_(category), kind_(std::move(kind)) {}

  ErrorCategory category() const noexcept { return category_; }
  /// Short machine-readable tag, e.g. "empty_input".
  const std::string& kind() const noexcept { return kind_; }

 private:
  ErrorCategory category_;
  std::string kind_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& msg)
      : Error(ErrorCategory::kValidation, "validation", msg) {}
};

struct EmptyInputError : Error {
  explicit EmptyInputError(const std::string& msg)
      : Error(ErrorCategory::kValidation, "empty_input", msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(ErrorCategory::kIo, "io", msg) {}
};

struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t line)
      : Error(ErrorCategory::kIo, "parse",
              msg + (line > 0 ? " (line " + std::to_string(line) + ")" : "")),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct DegenerateGeometryError : Error {
  explicit DegenerateGeometryError(const std::string& msg)
      : Error(ErrorCategory::kNumerical, "degenerate_geometry", msg) {}
};

struct UnderdeterminedFitError : Error {
  explicit UnderdeterminedFitError(const std::string& msg)
      : Error(ErrorCategory::kNumerical, "underdetermined_fit", msg) {}
};

struct RankDeficientError : Error {
  RankDeficientError(const std::string& msg, int deficient_index)
      : Error(ErrorCategory::kNumerical, "rank_deficient", msg),
        deficient_index_(deficient_index) {}
  /// Basis component that could not be resolved from the observed pixels.
  int deficient_index() const noexcept { return deficient_index_; }

 private:
  int deficient_index_;
};

}  // namespace occface
