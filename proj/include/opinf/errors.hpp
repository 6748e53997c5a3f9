#pragma once

#include <stdexcept>
#include <string>

namespace opinf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Array dimensions disagree with what an operation requires.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A time stepper produced a non-finite or runaway state, or its step size underflowed.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Least-squares system too ill-conditioned to solve at the requested regularization.
class SingularFitError : public Error {
public:
    using Error::Error;
};

class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// A metric whose denominator vanishes (zero reference norm, all-zero spectrum).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent on-disk artifact (manifest, binary payload, version).
class FormatError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace opinf
