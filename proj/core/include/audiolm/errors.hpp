#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace audiolm {

// Base for every error raised by the toolkit. Callers that only need a
// message and a nonzero exit status can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Index or id outside its valid interval (codebook, code, token id, step).
class RangeError : public Error {
 public:
  RangeError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Structurally well-formed input whose values violate an invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. Line numbers are 1-based; 0 means "not line oriented".
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& what)
      : Error(format(line, field, what)), line_(line), field_(std::move(field)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(std::size_t line, const std::string& field,
                            const std::string& what) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += "field '" + field + "': ";
    return out + what;
  }
  std::size_t line_;
  std::string field_;
};

// Inconsistent configuration (mixture weights, schedule fractions, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A scaling-law fit could not produce a usable result.
class FitError : public Error {
 public:
  using Error::Error;
};

// Shard bytes that do not follow the on-disk layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace audiolm
