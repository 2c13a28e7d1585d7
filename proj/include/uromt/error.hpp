#pragma once

#include <stdexcept>
#include <string>

namespace uromt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent volume/config file. `field()` names the offending key.
class FormatError : public Error {
public:
    FormatError(std::string field, const std::string &what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string &field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Linear solve that did not reach its tolerance.
class SolverError : public Error {
public:
    SolverError(const std::string &what, double residual)
        : Error(what + " (relative residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Non-finite cost or gradient during optimization.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// A linearization cache was used with controls it was not built from.
class StaleCacheError : public Error {
public:
    using Error::Error;
};

/// NMSE / PCTM with a zero denominator.
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

} // namespace uromt
