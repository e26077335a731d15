#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ifpt {

// Every failure raised by the library derives from Error, so callers can
// catch at whatever granularity they need. The CLI maps each kind onto a
// stable exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an evaluator (t < 0, t > T, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// A documented precondition on the inputs does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// A truncated series failed to settle within its term budget.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

// Computed quantities contradict each other beyond tolerance (mass created,
// negative probabilities, ...).
class NumericalConsistencyError : public Error {
public:
    using Error::Error;
};

// Root bracketing ran past its expansion limit.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// A target block mass cannot be attained by any slope.
class InfeasibleTargetError : public Error {
public:
    InfeasibleTargetError(std::size_t block, const std::string& what)
        : Error(what), block_(block) {}

    std::size_t block() const noexcept { return block_; }

private:
    std::size_t block_;
};

// A target distribution fails its admissibility checks.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed input file. line() is 1-based; 0 when the file could not be opened.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace ifpt
