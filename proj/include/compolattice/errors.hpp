#pragma once

#include <stdexcept>
#include <string>

namespace compolattice {

/// Bad run configuration (flags, config file, hyperparameter values). CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input data. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure (factorization of an SPD-by-contract matrix failed,
/// non-finite values where finite ones are required). CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unrecoverable failure inside an MCMC run; carries enough state for a post-mortem.
class ChainFailure : public NumericalError {
 public:
  ChainFailure(long iteration, const std::string& msg, std::string state_summary)
      : NumericalError("chain failed at iteration " + std::to_string(iteration) + ": " + msg),
        iteration(iteration),
        state_summary(std::move(state_summary)) {}

  long iteration;
  std::string state_summary;  // JSON text describing the state at failure
};

}  // namespace compolattice
