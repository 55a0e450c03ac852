#pragma once

#include <stdexcept>
#include <string>

namespace osmm {

/// Array or geometry shapes that do not line up.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration (geometry, schedule, subset count, run config keys).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A numerical process produced non-finite values.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Array file failures. Each is distinct so callers can tell a stale file
// from a damaged one.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VersionError : FormatError {
  using FormatError::FormatError;
};
struct TruncatedError : FormatError {
  using FormatError::FormatError;
};
struct ChecksumError : FormatError {
  using FormatError::FormatError;
};

}  // namespace osmm
