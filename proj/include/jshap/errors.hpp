#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jshap {

// Base of all library errors. Subclasses carry the failure class so callers
// can branch without string matching.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& what) : Error(what) {}
};

class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

class TrainingFailure : public Error {
 public:
  TrainingFailure(const std::string& what, std::size_t iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

class DegenerateSupportError : public Error {
 public:
  explicit DegenerateSupportError(const std::string& what) : Error(what) {}
};

class UndefinedCorrelationError : public Error {
 public:
  explicit UndefinedCorrelationError(const std::string& what) : Error(what) {}
};

class DegenerateNormalizationError : public Error {
 public:
  explicit DegenerateNormalizationError(const std::string& what) : Error(what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace jshap
