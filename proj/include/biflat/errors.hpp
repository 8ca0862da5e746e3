#pragma once

#include <stdexcept>
#include <string>

namespace biflat {

enum class ParseErrorKind {
    Syntax,
    UndeclaredCoordinate,
    DuplicateEntry,
    IndexOutOfRange,
    DimensionMismatch,
    ConflictingStructure,
    MissingField,
    InvalidMetric,
};

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorKind kind, int line, int column, const std::string& message)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " +
                             message),
          kind_(kind),
          line_(line),
          column_(column) {}

    ParseErrorKind kind() const noexcept { return kind_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    ParseErrorKind kind_;
    int line_;
    int column_;
};

inline const char* to_string(ParseErrorKind kind) {
    switch (kind) {
    case ParseErrorKind::Syntax: return "syntax";
    case ParseErrorKind::UndeclaredCoordinate: return "undeclared-coordinate";
    case ParseErrorKind::DuplicateEntry: return "duplicate-entry";
    case ParseErrorKind::IndexOutOfRange: return "index-out-of-range";
    case ParseErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ParseErrorKind::ConflictingStructure: return "conflicting-structure";
    case ParseErrorKind::MissingField: return "missing-field";
    case ParseErrorKind::InvalidMetric: return "invalid-metric";
    }
    return "unknown";
}

enum class JetErrorKind {
    ZeroConstantTerm,
    ExpOfNonzeroConstant,
    SpaceMismatch,
    DegreeExhausted,
};

class JetError : public std::runtime_error {
public:
    JetError(JetErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    JetErrorKind kind() const noexcept { return kind_; }

private:
    JetErrorKind kind_;
};

// The constant-term matrix of an endomorphism field is singular at the base point.
class SingularAtBasepoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A tensor operation received incompatible slot variances.
class VarianceError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ResonanceError : public std::runtime_error {
public:
    ResonanceError(const std::string& lambda, const std::string& message)
        : std::runtime_error(message), lambda_(lambda) {}
    const std::string& lambda() const noexcept { return lambda_; }

private:
    std::string lambda_;
};

// Raised when a Dubrovin-Frobenius structure cannot be assembled from (F, eta, e, E).
class DFError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The 1-form handed to the recursion integrator is not closed.
class IntegrabilityError : public std::runtime_error {
public:
    IntegrabilityError(int component, int i, int r, const std::string& message)
        : std::runtime_error(message), component_(component), i_(i), r_(r) {}
    int component() const noexcept { return component_; }
    int first() const noexcept { return i_; }
    int second() const noexcept { return r_; }

private:
    int component_;
    int i_;
    int r_;
};

// A stated precondition of a construction (flat chart, nondegenerate nabla E, ...) fails.
class HypothesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Something that must hold by construction did not; maps to exit code 3 in the CLI.
class InternalInvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace biflat
