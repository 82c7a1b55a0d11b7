#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace toricma {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (z_j = 0, t < 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A finite-difference stencil left the grid or touched an Outside node.
class StencilError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration, file, or violated precondition between inputs.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Geometric construction could not be completed (e.g. corridor does not fit).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// An iterative solve stopped before reaching its residual tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}

    const std::vector<double>& residual_history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

}  // namespace toricma
