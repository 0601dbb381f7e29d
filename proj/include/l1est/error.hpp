#pragma once

#include <stdexcept>
#include <string>

namespace l1est {

/// Bad user input: malformed graphs, out-of-range ids, invalid configs.
/// The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure while computing: infeasible problems, solver breakdowns.
/// The CLI maps these to exit code 2.
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InfeasibleError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

/// An error bound was requested outside its domain (|I| >= M/2).
class UndefinedBoundError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

/// Broken internal consistency check. Indicates a bug, not bad input.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace l1est
