#pragma once

#include <stdexcept>
#include <string>

namespace gencalc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument (non-positive radius, ε outside (0,1], dimension mismatch, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A caller-side precondition of an operation does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Mollifier construction failed; the message carries the moment-system conditioning.
class ConstructionError : public Error {
public:
    ConstructionError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// Evaluation point outside the declared domain of a net.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Evaluation produced a non-finite intermediate. `path()` names the node chain
/// from the root down to the offending node.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, std::string path)
        : Error(what + " at " + path), message_(what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }
    const std::string& message() const noexcept { return message_; }
    /// The offending value was ±inf rather than NaN.
    bool is_overflow() const noexcept { return message_ == "overflow"; }

private:
    std::string message_;
    std::string path_;
};

/// Adaptive quadrature did not reach its tolerance.
class QuadratureError : public Error {
public:
    using Error::Error;
};

/// Too few usable samples for an order fit.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Metric determinant fell below the non-degeneracy threshold.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// Malformed JSON input; the message is path-qualified.
class SchemaError : public Error {
public:
    using Error::Error;
};

}  // namespace gencalc
