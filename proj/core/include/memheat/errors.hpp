#pragma once

#include <stdexcept>
#include <string>

namespace memheat {

/// Argument outside the supported mathematical domain (e.g. x > 0 for the
/// Mittag-Leffler evaluator, p = inf with N = 4*beta).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Parameters are valid but fall outside what this library covers
/// (N > 4*beta, unsupported dimension for the radial numerics).
class OutOfScopeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A quadrature or series failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved error " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Malformed configuration or serialized input.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace memheat
