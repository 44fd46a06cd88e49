#pragma once

#include <stdexcept>
#include <string>

namespace pgcn {

// Base for everything this library throws; catch sites (CLI, tests) key off
// the concrete type to pick an exit code.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape disagreement between tensors / parameters / checkpoints.
struct DimensionError : Error {
    using Error::Error;
};

// Non-finite values or otherwise undefined numeric results.
struct NumericError : Error {
    using Error::Error;
};

// Inputs outside an operation's numeric domain (e.g. negative adjacency).
struct DomainError : Error {
    using Error::Error;
};

// A window or series shorter than an operation requires.
struct LengthError : Error {
    using Error::Error;
};

// Malformed input files; message carries the line number where known.
struct ParseError : Error {
    using Error::Error;
};

// Missing or unusable data (files, splits, node names in data files).
struct DataError : Error {
    using Error::Error;
};

// Invalid configuration or command arguments.
struct ConfigError : Error {
    using Error::Error;
};

// Two evaluations of a supposedly deterministic function disagreed.
struct DeterminismError : Error {
    using Error::Error;
};

}  // namespace pgcn
