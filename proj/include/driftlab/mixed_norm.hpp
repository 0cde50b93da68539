#pragma once

#include "driftlab/cylinder.hpp"
#include "driftlab/field.hpp"
#include "driftlab/norm_spec.hpp"
#include "driftlab/quadrature.hpp"

namespace driftlab {

struct QuadratureOptions {
    /// Refinement stops once successive levels agree to this relative tolerance.
    double rel_tol = 1e-4;
    int min_level = 0;
    int max_level = 4;
};

struct NormValue {
    double value = 0.0;
    double error_estimate = 0.0;
    int level = 0;
    bool converged = true;
    /// Set when an exponent is infinite: the max over nodes only bounds the ess-sup from below.
    bool lower_bound = false;
};

/// Iterated L_{p,q} norm of |f| over the cylinder, with refinement toward the
/// field's declared singular loci. Throws NonIntegrableSingularity when the
/// refinement sequence grows without settling.
NormValue mixed_norm(const Field& f, const ParabolicCylinder& c, const NormSpec& spec,
                     const QuadratureOptions& opt = {});

/// Single evaluation at a fixed refinement level.
double mixed_norm_at_level(const Field& f, const ParabolicCylinder& c, const NormSpec& spec, QuadLevel lvl);

}  // namespace driftlab
