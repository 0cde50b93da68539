#pragma once

#include <vector>

namespace driftlab {

struct Rule1D {
    std::vector<double> x;
    std::vector<double> w;

    std::size_t size() const noexcept { return x.size(); }
    void append(const Rule1D& other);
};

/// n-point Gauss-Legendre rule on [-1, 1]. Nodes computed once per n and cached.
const Rule1D& gauss_legendre(int n);

/// Gauss-Legendre rule mapped onto [a, b] with `panels` equal panels of n points.
Rule1D composite_gauss(double a, double b, int panels, int n);

/// Refinement level for the singular-aware rules. Higher level = more panels,
/// deeper geometric grading and more points per panel.
struct QuadLevel {
    int level = 0;

    int points_per_panel() const { return 4 + 2 * level; }
    int grading_depth() const { return 10 + 6 * level; }
    int smooth_panels() const { return 1 << level; }
};

/// Rule on [a, b] with geometric grading toward the flagged endpoints. The
/// innermost graded panel uses the substitution s = h u^6 so integrable power
/// singularities at the endpoint are integrated without touching it.
Rule1D graded_rule(double a, double b, bool grade_a, bool grade_b, QuadLevel lvl);

/// Product rule on the unit sphere S^{d-1}: directions (row-major, d per node)
/// and weights summing to the sphere area.
struct SphereRule {
    int d = 0;
    std::vector<double> dirs;
    std::vector<double> w;

    std::size_t size() const noexcept { return w.size(); }
    const double* dir(std::size_t i) const noexcept { return dirs.data() + i * static_cast<std::size_t>(d); }
};

SphereRule sphere_rule(int d, QuadLevel lvl);

}  // namespace driftlab
