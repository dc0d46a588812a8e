#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fracp {

enum class ErrorKind {
    InvalidParameter,
    ShapeMismatch,
    QuadratureFailure,
    StepFailure,
    EvolutionFailure,
    DegenerateStationary,
    FitFailure,
    InvalidTestFunction,
    SolverFailure,
    ConfigParse,
    Validation,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Exception type carried by every fallible operation in the library.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

} // namespace fracp
