#pragma once

#include <stdexcept>
#include <string>

namespace slowfast {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// The frozen-x generator is reducible (or numerically indistinguishable from
/// reducible): the stationary system has no unique solution.
class NotIrreducibleError : public Error {
public:
    explicit NotIrreducibleError(const std::string& msg) : Error(msg) {}
};

/// A linear solve met its equations but left a residual above the contract
/// tolerance.
class IllConditionedError : public Error {
public:
    IllConditionedError(const std::string& msg, double residual)
        : Error(msg), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_ = 0.0;
};

/// A sampled jump rate exceeded the declared dominating intensity.
class ZetaViolatedError : public Error {
public:
    explicit ZetaViolatedError(const std::string& msg) : Error(msg) {}
};

/// A target state or drift requirement is outside the reachable/controllable
/// subspace.
class InfeasibleError : public Error {
public:
    explicit InfeasibleError(const std::string& msg) : Error(msg) {}
};

/// A numerical routine failed in a way that is not attributable to the inputs
/// (e.g. a KKT system that should be solvable is singular).
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/// Config file parse or validation failure. Messages carry line numbers where
/// available.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// File read/write failure.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace slowfast
