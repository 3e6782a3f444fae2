#pragma once

#include <stdexcept>
#include <string>

namespace rgmv {

/// Malformed or unusable input data (files, panels, windows).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value; the message names the offending field.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a usable result
/// (singular system, divergent iterate, collapsed power iteration).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested functionality is registered but intentionally not provided.
class NotImplementedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace rgmv
