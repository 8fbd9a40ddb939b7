#pragma once

#include <stdexcept>
#include <string>

namespace dalbt {

// Error taxonomy. Every category derives from Error so callers can catch
// the whole family or a specific kind.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed on-disk data (bad magic number, bad record length).
class FormatError : public Error {
public:
    using Error::Error;
};

// Inputs that disagree with each other (count mismatch, id collision,
// unknown id).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

// Invalid configuration values or impossible requested sizes.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite values or failed numerical procedures.
class NumericError : public Error {
public:
    using Error::Error;
};

// API misuse (backward before forward, empty evaluation set).
class UsageError : public Error {
public:
    using Error::Error;
};

// Read/write failures and truncated files.
class IoError : public Error {
public:
    using Error::Error;
};

// A Weibull tail with no information to fit (all values equal, too few
// positive values). Callers fall back to a pooled model or to random
// sampling.
class DegenerateFitError : public NumericError {
public:
    using NumericError::NumericError;
};

// The selected acquisition strategy cannot produce scores in the current
// stage (e.g. no class had enough correct samples to fit); the loop
// degrades to random selection.
class StrategyUnavailableError : public Error {
public:
    using Error::Error;
};

} // namespace dalbt
