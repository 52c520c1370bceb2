#pragma once

#include <stdexcept>

namespace ebmlab {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or size disagreement between operands.
struct DimensionError : Error {
    using Error::Error;
};

/// NaN or Inf encountered where finite values are required.
struct NonFiniteError : Error {
    using Error::Error;
};

/// Invalid or inconsistent configuration value.
struct ConfigError : Error {
    using Error::Error;
};

/// Filesystem or serialization failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace ebmlab
