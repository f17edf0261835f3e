#pragma once

#include <stdexcept>
#include <string>

namespace mars {

// Argument outside the support of a time-grid operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Malformed input file or digitized coordinates.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Values that parse but violate a data rule (non-positive times, degenerate rates).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A study whose evidence cannot be classified, or an invalid run configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// At-risk counts that cannot be reconciled with the curve.
class ReconstructionError : public std::runtime_error {
public:
  ReconstructionError(const std::string &what, int interval)
      : std::runtime_error(what), interval_(interval) {}
  int interval() const noexcept { return interval_; }

private:
  int interval_;
};

class InitializationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DiagnosticError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace mars
