#pragma once

#include <stdexcept>
#include <string>

namespace conveyor {

// Invalid or missing configuration input.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Request violates a physical or hardware constraint (resonant laser, AOM
// bandwidth, acceleration beyond the trap limit, ...).
class ConstraintError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Numerical failure at run time (non-finite state, non-converging search).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-fatal diagnostics go to stderr; tests may silence them.
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace conveyor
