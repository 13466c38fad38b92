#pragma once

#include <stdexcept>
#include <string>

namespace pfsmc {

/// Argument outside the effective domain of a monotone graph.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative method ran out of its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hypotheses of a sliding bound are not met, so the bound says nothing.
class BoundInapplicable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite state during time stepping. Carries the time of failure.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double time)
      : std::runtime_error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Invalid or unparsable run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pfsmc
