#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace keyforge {

enum class ErrorKind {
  TooShort,
  AllTrimmed,
  Unordered,
  ParseError,
  SchemaError,
  ZeroMean,
  ZeroVariance,
  ZeroPooledVariance,
  InvalidSpec,
  InvalidCounts,
  OutOfRange,
  EmptySample,
  EmptyCorpus,
  InsufficientData,
  UntrainedModel,
  SingleClass,
  NonFiniteLoss,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Exit-code category used by the CLI: 2 = bad input data, 3 = numeric failure.
int exit_code_for(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by corpus readers; `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, std::string field, const std::string& message)
      : Error(ErrorKind::SchemaError,
              "line " + std::to_string(line) + ": field '" + field + "': " + message),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

}  // namespace keyforge
