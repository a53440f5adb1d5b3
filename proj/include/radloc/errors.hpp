#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace radloc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input record violates a documented domain invariant.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Energies give a Compton cosine outside (-1, 1); the pair is physically
/// inconsistent and must be dropped.
class ScatteringRejected : public Error {
 public:
  explicit ScatteringRejected(double cosine);
  double cosine() const noexcept { return cosine_; }

 private:
  double cosine_;
};

/// Electron and photon events coincide; the cone axis is undefined.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

/// Requested time lies outside the sampled pose stream.
class ExtrapolationError : public Error {
 public:
  ExtrapolationError(double t, double first, double last);
};

/// Estimator operation called in the wrong lifecycle state.
class LifecycleError : public Error {
 public:
  using Error::Error;
};

/// Every multistart of the initializer failed to find a feasible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A text input could not be parsed; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }
  const std::string& source() const noexcept { return source_; }

 private:
  std::string source_;
  std::size_t line_;
};

/// Configuration document failed schema validation.
class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Timestamped records arrived out of order.
class OrderingError : public Error {
 public:
  using Error::Error;
};

}  // namespace radloc
