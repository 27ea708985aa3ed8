#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tetrodiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate or otherwise unusable geometry (zero-volume element, bad indices).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// The initial mesh could not be constructed from a domain description.
class BuildError : public Error {
 public:
  using Error::Error;
};

/// A linear solve did not reach the requested relative residual.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Newton iteration failed; carries the residual norm of every iteration.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Malformed input file. line() is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class OracleError : public Error {
 public:
  using Error::Error;
};

}  // namespace tetrodiff
