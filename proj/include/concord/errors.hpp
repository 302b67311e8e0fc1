#pragma once

#include <stdexcept>
#include <string>

namespace concord {

/// Base of every error the library throws. `kind()` is a stable short tag
/// used in machine-readable error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& m) : Error("dimension_mismatch", m) {}
};

class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string& m) : Error("non_finite", m) {}
};

class NotSymmetricError : public Error {
 public:
  explicit NotSymmetricError(const std::string& m) : Error("not_symmetric", m) {}
};

class SingularMatrixError : public Error {
 public:
  explicit SingularMatrixError(const std::string& m) : Error("singular_matrix", m) {}
};

class RankDeficientError : public Error {
 public:
  explicit RankDeficientError(const std::string& m) : Error("rank_deficient", m) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& m) : Error("no_convergence", m) {}
  ConvergenceError(std::string kind, const std::string& m) : Error(std::move(kind), m) {}
};

class SeparationError : public ConvergenceError {
 public:
  explicit SeparationError(const std::string& m) : ConvergenceError("separation", m) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& m) : Error("invalid_argument", m) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& m) : Error("schema", m) {}
};

/// Malformed input data. Carries the 1-based line number of the offending
/// record (0 when not tied to a line).
class ParseError : public Error {
 public:
  ParseError(const std::string& m, std::size_t line)
      : Error("parse", m + (line ? " (line " + std::to_string(line) + ")" : std::string())),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace concord
