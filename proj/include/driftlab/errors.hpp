#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

/// Error categories shared by every module. The CLI maps them onto exit codes.
enum class ErrorKind {
    NonIntegrableSingularity,
    EmptyCylinder,
    SearchBudgetExceeded,
    UnknownSpec,
    InvalidParams,
    QuadratureFailure,
    DegenerateCI,
    BoundaryViolation,
    ConfigInvalid,
    BudgetExceeded,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

class LabError : public std::runtime_error {
public:
    LabError(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw LabError(kind, what);
}

}  // namespace driftlab
