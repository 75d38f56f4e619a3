#pragma once

#include <stdexcept>
#include <string>

namespace sdp {

// Malformed or inconsistent file contents (bad magic, truncated payload, ...).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem-level failures (open/read/write).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension / shape mismatches between operands.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration or argument values.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values where finite ones are required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace sdp
