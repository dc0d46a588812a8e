#include "fracp/error.hpp"

namespace fracp {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid_parameter";
    case ErrorKind::ShapeMismatch: return "shape_mismatch";
    case ErrorKind::QuadratureFailure: return "quadrature_failure";
    case ErrorKind::StepFailure: return "step_failure";
    case ErrorKind::EvolutionFailure: return "evolution_failure";
    case ErrorKind::DegenerateStationary: return "degenerate_stationary";
    case ErrorKind::FitFailure: return "fit_failure";
    case ErrorKind::InvalidTestFunction: return "invalid_test_function";
    case ErrorKind::SolverFailure: return "solver_failure";
    case ErrorKind::ConfigParse: return "config_parse";
    case ErrorKind::Validation: return "validation";
    }
    return "unknown";
}

} // namespace fracp
