#pragma once

#include <stdexcept>
#include <string>

namespace jdd {

/// Shape or size mismatch between arrays, or dimensions a routine cannot handle.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent or unsupported configuration values.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Numerically invalid inputs such as negative loss values.
struct NumericError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A dataset file could not be decoded, or is in a lossy format.
struct IngestionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Command-line misuse or empty inputs to reporting.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace jdd
