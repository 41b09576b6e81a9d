#pragma once

#include <stdexcept>
#include <string>

namespace mcn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape/arity mismatch between tensors or argument lists.
struct DimensionError : Error {
  using Error::Error;
};

/// Malformed input file (annotations, feature container, word vectors, config).
struct FormatError : Error {
  using Error::Error;
};

/// Structurally valid input with unusable content (NaN features, missing videos, bad spans).
struct DataError : Error {
  using Error::Error;
};

/// Inconsistent or incomplete run configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Non-finite loss or gradient during training.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace mcn
