#pragma once

#include <stdexcept>
#include <string>

namespace hiermix {

// Error taxonomy mirrored by the CLI exit codes: config=2, data=3, numerical=4.

/// Invalid configuration: bad hyperparameters, unknown config keys, bad flags.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input data: parse failures, header mismatches, non-finite values.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: non-SPD matrix after jitter, divergent update, etc.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hiermix
