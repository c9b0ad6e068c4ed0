#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace copmeta {

/// Parameter or argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A closed-form evaluation overflowed (extreme dependence parameters).
class NumericOverflowError : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

/// A likelihood contribution could not be evaluated to a finite number.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(const std::string& what, std::size_t study)
        : std::runtime_error(what), study_(study) {}
    std::size_t study() const noexcept { return study_; }

private:
    std::size_t study_;
};

/// Input data violates a record invariant (negative counts, empty arms).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input file.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Vuong comparison of two models with identical per-study contributions.
class DegenerateComparisonError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested problem size exceeds the supported budget.
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

}  // namespace copmeta
