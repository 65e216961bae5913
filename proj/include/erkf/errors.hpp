#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace erkf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Back-substitution met a pivot below the scale-relative tolerance.
class SingularPivot : public Error {
 public:
  explicit SingularPivot(std::ptrdiff_t row)
      : Error("singular pivot in row " + std::to_string(row)), row_(row) {}
  std::ptrdiff_t row() const { return row_; }

 private:
  std::ptrdiff_t row_;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class SingularAttitude : public Error {
 public:
  using Error::Error;
};

class SingularLatitude : public Error {
 public:
  using Error::Error;
};

class SchedulerError : public Error {
 public:
  using Error::Error;
};

class InvalidScenario : public Error {
 public:
  using Error::Error;
};

class StructuralError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace erkf
