#pragma once

#include <stdexcept>
#include <string>

namespace dyntok {

// Shape or argument mismatch detected before any computation.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Configuration that cannot be executed (bad schedule, missing profile, ...).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Structurally invalid file contents (wrong version, missing field, bad value).
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem level failure: missing file, short read, unwritable path.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Calibration cannot proceed (corpus too small, empty batch, ...).
struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dyntok
