#pragma once

#include "driftlab/field.hpp"

namespace driftlab {

enum class ScaleKind {
    /// b~(t, x) = rho * b(rho^2 t, rho x)
    Drift,
    /// s~(t, x) = s(rho^2 t, rho x)
    Diffusion,
};

/// Parabolic rescaling of a field. Singular loci and support hints are mapped
/// by (t, x) -> (t / rho^2, x / rho); radial, temporal and sum structure is kept.
Field parabolic_scale(const Field& f, double rho, ScaleKind kind);

}  // namespace driftlab
