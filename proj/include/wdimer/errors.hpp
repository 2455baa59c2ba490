#ifndef WDIMER_ERRORS_HPP
#define WDIMER_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wdimer {

/// Malformed or inconsistent run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: too many diverged trajectories, an unstable or leaking
/// master-equation run (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TooManyDivergences : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CutoffLeak : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class Instability : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Accumulators / files that cannot be combined or compared.
class ShapeMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wdimer

#endif  // WDIMER_ERRORS_HPP
