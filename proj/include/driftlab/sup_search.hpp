#pragma once

#include <functional>
#include <optional>

#include "driftlab/cylinder.hpp"
#include "driftlab/field.hpp"
#include "driftlab/mixed_norm.hpp"

namespace driftlab {

/// Where the search looks: radius ceiling, the region that can carry mass and
/// the loci where extremal cylinders are expected to sit.
struct SearchDomain {
    int d = 1;
    double rho_max = 1.0;
    SupportHint support;
    SingularSet singular;
    /// Only one start time is searched when the objective ignores t0.
    bool time_independent = false;

    static SearchDomain for_field(const Field& f, double rho_max);
};

struct SearchOptions {
    /// Lattice radii rho_max * 2^-k for k = 0..levels.
    int levels = 6;
    /// Global lattice points per spatial dimension (in addition to singular anchors).
    int lattice_per_dim = 4;
    /// Global lattice points in time per radius.
    int lattice_time = 6;
    /// Multi-start count for local refinement.
    int top_k = 5;
    /// Coordinate-descent sweeps per start before the search is flagged.
    int max_sweeps = 40;
    QuadratureOptions coarse{1e-2, 0, 0};
    QuadratureOptions fine{1e-4, 0, 4};
    int workers = 1;
};

struct SupResult {
    double value = 0.0;
    std::optional<ParabolicCylinder> argmax;
    /// Descent hit its sweep cap without the step sizes collapsing.
    bool budget_exceeded = false;
    /// The maximizer sits on the smallest explored radius with values still
    /// growing as the radius shrinks: the supremum may not be attained.
    bool unresolved_small_scale = false;
    std::size_t evaluations = 0;
    /// Best lattice value per radius level (coarse quadrature), largest radius first.
    std::vector<double> per_level;
};

/// Objective: cylinder + quadrature options -> value to maximize.
using CylinderObjective = std::function<double(const ParabolicCylinder&, const QuadratureOptions&)>;

/// Two-stage global maximization over cylinders C_r(t0, x0) with r <= rho_max:
/// a lattice over radii, times and centers (dense near singular loci), then
/// coordinate descent from the best lattice points. Ties resolve to the
/// smallest radius, then the lexicographically smallest (t0, x0).
SupResult cylinder_sup_search(const CylinderObjective& objective, const SearchDomain& domain,
                              const SearchOptions& opt = {});

}  // namespace driftlab
