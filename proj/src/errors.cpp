#include "driftlab/errors.hpp"

namespace driftlab {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NonIntegrableSingularity: return "NonIntegrableSingularity";
        case ErrorKind::EmptyCylinder: return "EmptyCylinder";
        case ErrorKind::SearchBudgetExceeded: return "SearchBudgetExceeded";
        case ErrorKind::UnknownSpec: return "UnknownSpec";
        case ErrorKind::InvalidParams: return "InvalidParams";
        case ErrorKind::QuadratureFailure: return "QuadratureFailure";
        case ErrorKind::DegenerateCI: return "DegenerateCI";
        case ErrorKind::BoundaryViolation: return "BoundaryViolation";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
        case ErrorKind::BudgetExceeded: return "BudgetExceeded";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace driftlab
