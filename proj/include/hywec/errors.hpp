#pragma once

#include <stdexcept>
#include <string>

namespace hywec {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rejected input: wrong dimensions, out-of-domain argument, bad configuration value.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// A theta matrix violates its structure mask (nonzero value in a fixed slot).
class StructureError : public Error {
public:
    using Error::Error;
};

/// Integration or adaptation produced a non-finite state.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, double time_of_failure)
        : Error(what), time(time_of_failure) {}
    double time;
};

/// Malformed dataset or table file; carries the offending location when known.
class IngestionError : public Error {
public:
    using Error::Error;
};

/// Radiation-kernel fit could not produce a usable stable realization.
class FitError : public Error {
public:
    FitError(const std::string& what, double residual_rms)
        : Error(what), residual(residual_rms) {}
    double residual;
};

/// A fidelity metric is undefined on the given data (empty, zero variance, all below floor).
class MetricError : public Error {
public:
    using Error::Error;
};

}  // namespace hywec
