#pragma once

#include <stdexcept>
#include <string>

namespace rydchain {

/// Two atoms sit at the same point, so 1/R^3 diverges.
class SingularGeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value violates a precondition (step size, window, keys).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data are out of range for the requested fit or transform.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an API contract (unnormalized distribution, bad index).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A fit could not be carried out (no spectral peak, too few points).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The integrator produced a state outside tolerance.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& module, double time_us, const std::string& what)
      : std::runtime_error(module + " at t = " + std::to_string(time_us) + " us: " + what),
        module_(module),
        time_us_(time_us) {}

  const std::string& module() const noexcept { return module_; }
  double time_us() const noexcept { return time_us_; }

 private:
  std::string module_;
  double time_us_;
};

}  // namespace rydchain
