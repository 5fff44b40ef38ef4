#pragma once

/**
 * @file errors.hpp
 * @brief Exception types shared by every thermo component.
 *
 * Each error category maps onto one CLI exit code: domain/usage errors
 * exit 2, numerical failures exit 3 and enumeration budgets exit 4.
 */

#include <stdexcept>
#include <string>

namespace thermo {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter outside the admissible set of a constructor or query.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Query point outside the range covered by a computed curve.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to converge.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, int branch = -1)
        : Error(what), branch_(branch) {}
    int branch() const noexcept { return branch_; }

private:
    int branch_;
};

/// Enumeration or memory budget exceeded.
class BudgetError : public Error {
public:
    using Error::Error;
};

/// Input data violating a structural requirement (e.g. convexity).
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace thermo
