#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace loanfair {

/// Base for every error the library raises. `code()` is a stable,
/// machine-readable identifier that the HTTP layer and CLI surface verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Malformed input file content. `line()` is 1-based (header is line 1).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("parse_error", "line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& message) : Error("schema_error", message) {}
};

/// A precondition of an operation was violated by its caller.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& message) : Error("contract_error", message) {}
};

class EmptyDatasetError : public Error {
 public:
  explicit EmptyDatasetError(const std::string& message) : Error("empty_dataset", message) {}
};

class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string& message) : Error("degenerate_data", message) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(double gradient_norm, int iterations)
      : Error("convergence_error", "optimizer did not converge after " + std::to_string(iterations) +
                                       " iterations (gradient norm " + std::to_string(gradient_norm) + ")"),
        gradient_norm_(gradient_norm) {}
  double gradient_norm() const noexcept { return gradient_norm_; }

 private:
  double gradient_norm_;
};

class UndefinedRatioError : public Error {
 public:
  explicit UndefinedRatioError(const std::string& message) : Error("undefined_ratio", message) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& message) : Error("not_found", message) {}
};

/// Rejected input value; `field()` names the offending field or attribute.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error("validation_error", field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class UnresolvedCountryError : public Error {
 public:
  explicit UnresolvedCountryError(const std::string& country)
      : Error("unresolved_country", "no cultural scores for country '" + country + "'") {}
};

/// Event-log replay stopped at a line that could not be decoded.
class ReplayError : public Error {
 public:
  ReplayError(std::size_t line, const std::string& message)
      : Error("corrupt_log", "event log line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace loanfair
