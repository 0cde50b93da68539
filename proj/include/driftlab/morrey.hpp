#pragma once

#include "driftlab/field.hpp"
#include "driftlab/norm_spec.hpp"
#include "driftlab/sup_search.hpp"

namespace driftlab {

/// sup over rho <= rho_max and cylinders C of radius rho of rho^beta times the
/// normalized L_{p,q}(C) norm of f. `spec.normalized` is forced on.
SupResult morrey_norm(const Field& f, const NormSpec& spec, double beta, double rho_max,
                      const SearchOptions& opt = {});

/// sup over r <= rho of r times the worst normalized cylinder norm of |b| at radius r.
SupResult drift_functional(const Field& b, const NormSpec& spec, double rho, const SearchOptions& opt = {});

/// rho^beta times the normalized norm on one cylinder (the Morrey objective).
double morrey_objective(const Field& f, const ParabolicCylinder& c, const NormSpec& spec, double beta,
                        const QuadratureOptions& q);

}  // namespace driftlab
