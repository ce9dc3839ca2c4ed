#pragma once

#include <stdexcept>
#include <string>

namespace chbreak {

/// Raised when a field or intermediate result contains NaN/Inf.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when initial data carries no slope information (e.g. u0 = const).
class DegenerateDataError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Raised by configuration parsing and validation.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace chbreak
