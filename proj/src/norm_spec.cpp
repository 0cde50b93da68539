#include "driftlab/norm_spec.hpp"

#include <cmath>
#include <sstream>

#include "driftlab/errors.hpp"

namespace driftlab {

const char* to_string(Ordering o) noexcept { return o == Ordering::SpaceInner ? "space_inner" : "time_inner"; }

Ordering parse_ordering(const std::string& s) {
    if (s == "space_inner" || s == "SpaceInner" || s == "space") return Ordering::SpaceInner;
    if (s == "time_inner" || s == "TimeInner" || s == "time") return Ordering::TimeInner;
    fail(ErrorKind::InvalidParams, "unknown ordering '" + s + "'");
}

void NormSpec::validate() const {
    if (!(p >= 1.0) || !(q >= 1.0)) fail(ErrorKind::InvalidParams, "norm exponents must lie in [1, inf]");
}

void GlobalParams::validate() const {
    if (d < 1) fail(ErrorKind::InvalidParams, "d must be >= 1");
    if (!(d0 > 0.5 * d && d0 < d)) fail(ErrorKind::InvalidParams, "d0 must satisfy d/2 < d0 < d");
    if (!(delta > 0.0 && delta <= 1.0)) fail(ErrorKind::InvalidParams, "delta must lie in (0, 1]");
    if (!(beta0 > 1.0 && beta0 < 2.0)) fail(ErrorKind::InvalidParams, "beta0 must lie in (1, 2)");
    if (!(beta0p > 1.0 && beta0p < beta0)) fail(ErrorKind::InvalidParams, "beta0p must lie in (1, beta0)");
}

Admissibility admissible(double p, double q, const GlobalParams& params, Ordering ordering) {
    Admissibility out;
    const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
    const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
    constexpr double slack = 1e-12;
    out.d0_sum = params.d0 * inv_p + inv_q;
    out.admissible = p > 1.0 && q > 1.0 && out.d0_sum <= 1.0 + slack;
    out.d_sum = params.d * inv_p + inv_q;
    const bool pairing = ordering == Ordering::SpaceInner ? p >= q : p <= q;
    out.uniqueness_condition = out.d_sum <= 1.0 + slack && pairing;

    std::ostringstream msg;
    msg << "d0/p + 1/q = " << out.d0_sum << (out.admissible ? " <= 1" : " > 1 (not admissible)")
        << "; d/p + 1/q = " << out.d_sum << "; ordering " << to_string(ordering) << " requires "
        << (ordering == Ordering::SpaceInner ? "p >= q" : "p <= q") << (pairing ? " (holds)" : " (fails)");
    out.diagnostic = msg.str();
    return out;
}

}  // namespace driftlab
