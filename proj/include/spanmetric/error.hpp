#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spanmetric {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented range or offset invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Tensor, distribution or sequence dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A caller-supplied configuration cannot be honoured.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training corpus lacks the supervision a curriculum phase needs.
class SupervisionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Statistic is undefined for the given input (zero variance, single class...).
class UndefinedStatistic : public Error {
 public:
  using Error::Error;
};

// A perturbation generator cannot be applied to the given segment.
class NotApplicable : public Error {
 public:
  using Error::Error;
};

// Malformed input record. `line` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0) : Error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Training diverged or was given unusable data.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace spanmetric
