#pragma once

#include <stdexcept>
#include <string>

namespace hetreg {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Tensor/layer dimension mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite values fed to a numeric routine.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss (CLI exit code 3).
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int epoch, int batch)
        : Error(what), epoch(epoch), batch(batch) {}
    int epoch;
    int batch;
};

/// Residual cache is incomplete, corrupt, or stale (CLI exit code 4).
class CacheError : public Error {
public:
    using Error::Error;
};

/// Malformed input file (CSV, checkpoint, cache, report).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace hetreg
