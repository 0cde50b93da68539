#pragma once

#include <string>

namespace driftlab {

/// Which variable is integrated first in the iterated L_{p,q} norm.
/// SpaceInner: (int_t (int_x |f|^p dx)^{q/p} dt)^{1/q}.
/// TimeInner:  (int_x (int_t |f|^q dt)^{p/q} dx)^{1/p}.
enum class Ordering { SpaceInner, TimeInner };

const char* to_string(Ordering o) noexcept;
Ordering parse_ordering(const std::string& s);

/// p is the spatial exponent and q the temporal one in both orderings.
/// Infinite exponents are accepted and evaluated as a max over quadrature nodes.
struct NormSpec {
    double p = 2.0;
    double q = 2.0;
    Ordering ordering = Ordering::SpaceInner;
    bool normalized = true;

    /// Throws InvalidParams unless p, q lie in [1, inf].
    void validate() const;
};

struct GlobalParams {
    int d = 3;
    double d0 = 2.0;
    double delta = 0.5;
    double beta0 = 1.5;
    double beta0p = 1.25;

    /// Throws InvalidParams unless d/2 < d0 < d, delta in (0,1], beta0 in (1,2), beta0p in (1, beta0).
    void validate() const;
};

struct Admissibility {
    bool admissible = false;        // d0/p + 1/q <= 1
    double d0_sum = 0.0;            // d0/p + 1/q
    bool uniqueness_condition = false;  // d/p + 1/q <= 1 plus the ordering/exponent pairing
    double d_sum = 0.0;             // d/p + 1/q
    std::string diagnostic;
};

Admissibility admissible(double p, double q, const GlobalParams& params, Ordering ordering);

}  // namespace driftlab
