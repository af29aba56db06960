#pragma once

#include <stdexcept>
#include <string>

namespace ulgfbp {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad call-site arguments or configuration values. CLI exit code 1.
struct ArgumentError : Error {
    using Error::Error;
};

// Incompatible image / tensor dimensions.
struct DimensionError : ArgumentError {
    using ArgumentError::ArgumentError;
};

// Problems with input data: dataset layout, undecodable files. CLI exit code 2.
struct DataError : Error {
    using Error::Error;
};

// Filesystem failures on output paths. CLI exit code 2.
struct IoError : Error {
    using Error::Error;
};

} // namespace ulgfbp
