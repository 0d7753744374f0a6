#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace synthfid {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Inputs with incompatible shapes (row/column counts, dimensions).
class InputShapeError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent input data (NaN, missing fidelity rows, bad CSV).
class InvalidDataError : public Error {
public:
  using Error::Error;
};

/// Parse failures carry the 1-based line number of the offending input.
class ParseError : public Error {
public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

/// Cholesky failed even after the maximum jitter was added.
class ConditioningError : public Error {
public:
  ConditioningError(const std::string& what, double jitter)
      : Error(what + " (last jitter tried: " + std::to_string(jitter) + ")"),
        jitter_(jitter) {}
  double jitter() const noexcept { return jitter_; }

private:
  double jitter_;
};

class FitError : public Error {
public:
  FitError(const std::string& what, std::vector<std::string> causes)
      : Error(what), causes_(std::move(causes)) {}
  const std::vector<std::string>& causes() const noexcept { return causes_; }

private:
  std::vector<std::string> causes_;
};

class InvalidTaskCovarianceError : public Error {
public:
  InvalidTaskCovarianceError(const std::string& what, double min_eigenvalue)
      : Error(what + " (min eigenvalue " + std::to_string(min_eigenvalue) + ")"),
        min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
  double min_eigenvalue_;
};

class DegenerateFidelityError : public Error {
public:
  DegenerateFidelityError(const std::string& what, int column)
      : Error(what), column_(column) {}
  int column() const noexcept { return column_; }

private:
  int column_;
};

class IllConditionedBasisError : public Error {
public:
  IllConditionedBasisError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

private:
  double condition_;
};

class InvalidCorrelationMatrixError : public Error {
public:
  using Error::Error;
};

/// A requested value fell outside its admissible interval.
class RangeError : public Error {
public:
  RangeError(const std::string& what, double lower, double upper)
      : Error(what), lower_(lower), upper_(upper) {}
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

private:
  double lower_;
  double upper_;
};

/// API misuse on a stateful object (e.g. asking an exhausted session for bounds).
class ProtocolError : public Error {
public:
  using Error::Error;
};

class DomainError : public Error {
public:
  DomainError(const std::string& what, int row) : Error(what), row_(row) {}
  int row() const noexcept { return row_; }

private:
  int row_;
};

/// Numerical failure inside the sampler (zero heuristic variance, unrealizable spec).
class SamplingError : public Error {
public:
  using Error::Error;
};

}  // namespace synthfid
