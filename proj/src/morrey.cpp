#include "driftlab/morrey.hpp"

#include <cmath>

#include "driftlab/errors.hpp"

namespace driftlab {

double morrey_objective(const Field& f, const ParabolicCylinder& c, const NormSpec& spec, double beta,
                        const QuadratureOptions& q) {
    NormSpec s = spec;
    s.normalized = true;
    return std::pow(c.rho(), beta) * mixed_norm(f, c, s, q).value;
}

SupResult morrey_norm(const Field& f, const NormSpec& spec, double beta, double rho_max, const SearchOptions& opt) {
    spec.validate();
    if (!(beta >= 0.0)) fail(ErrorKind::InvalidParams, "Morrey exponent must be nonnegative");
    if (!(rho_max > 0.0 && rho_max <= 1.0)) fail(ErrorKind::InvalidParams, "rho_max must lie in (0, 1]");
    const CylinderObjective obj = [&](const ParabolicCylinder& c, const QuadratureOptions& q) {
        return morrey_objective(f, c, spec, beta, q);
    };
    return cylinder_sup_search(obj, SearchDomain::for_field(f, rho_max), opt);
}

SupResult drift_functional(const Field& b, const NormSpec& spec, double rho, const SearchOptions& opt) {
    if (!(rho > 0.0 && rho <= 1.0)) fail(ErrorKind::InvalidParams, "rho must lie in (0, 1]");
    return morrey_norm(b, spec, 1.0, rho, opt);
}

}  // namespace driftlab
