#include "driftlab/mixed_norm.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

struct SpatialNodes {
    int d = 0;
    std::vector<double> x;
    std::vector<double> w;

    std::size_t size() const noexcept { return w.size(); }
    std::span<const double> point(std::size_t i) const {
        return {x.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
    }
};

Rule1D time_rule(const Field& f, double ta, double tb, QuadLevel lvl) {
    Rule1D r;
    if (!(tb > ta)) return r;
    if (f.time_independent()) {
        r.x.push_back(0.5 * (ta + tb));
        r.w.push_back(tb - ta);
        return r;
    }
    std::vector<double> cuts{ta};
    for (double s : f.singular().times)
        if (s > ta && s < tb) cuts.push_back(s);
    cuts.push_back(tb);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const auto& times = f.singular().times;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k];
        const double b = cuts[k + 1];
        const double len = b - a;
        bool grade_a = false;
        bool grade_b = false;
        for (double s : times) {
            if (s <= a && a - s <= 0.5 * len) grade_a = true;
            if (s >= b && s - b <= 0.5 * len) grade_b = true;
        }
        r.append(graded_rule(a, b, grade_a, grade_b, lvl));
    }
    return r;
}

// Exit distance along direction u of a ray from c (inside or on the ball) through B_rho(x0).
double ray_exit(std::span<const double> c, const double* u, std::span<const double> x0, double rho) {
    double uv = 0.0;
    double vv = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double v = c[i] - x0[i];
        uv += u[i] * v;
        vv += v * v;
    }
    const double disc = uv * uv - vv + rho * rho;
    if (disc <= 0.0) return 0.0;
    return std::max(0.0, -uv + std::sqrt(disc));
}

SpatialNodes spatial_nodes(const Field& f, const ParabolicCylinder& c, QuadLevel lvl) {
    const int d = c.dim();
    const double rho = c.rho();
    const Point& x0 = c.center();
    SpatialNodes nodes;
    nodes.d = d;

    const SupportHint& sup = f.support();
    if (sup.bounded_space() && distance(sup.center, x0) > sup.radius + rho) return nodes;

    // Polar center: the declared singular axis inside the ball closest to its center.
    const Point* singular_center = nullptr;
    double best = kInf;
    bool near_outside = false;
    for (const Point& s : f.singular().axes) {
        const double dist = distance(s, x0);
        if (dist <= rho && dist < best) {
            best = dist;
            singular_center = &s;
        } else if (dist > rho && dist <= 1.5 * rho) {
            near_outside = true;
        }
    }
    const Point& pc = singular_center ? *singular_center : x0;
    const bool grade_origin = singular_center != nullptr;
    const bool grade_rim = !grade_origin && near_outside;

    double clip = kInf;
    if (sup.bounded_space() && distance(sup.center, pc) <= 1e-14 * (1.0 + rho)) clip = sup.radius;

    const SphereRule sphere = sphere_rule(d, lvl);
    const Rule1D unit = graded_rule(0.0, 1.0, grade_origin, grade_rim, lvl);
    nodes.x.reserve(sphere.size() * unit.size() * static_cast<std::size_t>(d));
    nodes.w.reserve(sphere.size() * unit.size());
    for (std::size_t k = 0; k < sphere.size(); ++k) {
        const double* u = sphere.dir(k);
        double rmax = grade_origin ? ray_exit(pc, u, x0, rho) : rho;
        rmax = std::min(rmax, clip);
        if (!(rmax > 0.0)) continue;
        for (std::size_t j = 0; j < unit.size(); ++j) {
            const double r = rmax * unit.x[j];
            const double wt = sphere.w[k] * unit.w[j] * rmax * std::pow(r, d - 1);
            for (int i = 0; i < d; ++i) nodes.x.push_back(pc[i] + r * u[i]);
            nodes.w.push_back(wt);
        }
    }
    return nodes;
}

double power_mean(double sum, double measure, double exponent, bool normalized) {
    const double base = normalized ? sum / measure : sum;
    return std::pow(base, 1.0 / exponent);
}

}  // namespace

double mixed_norm_at_level(const Field& f, const ParabolicCylinder& c, const NormSpec& spec, QuadLevel lvl) {
    spec.validate();
    if (c.dim() != f.dim()) fail(ErrorKind::InvalidParams, "cylinder and field dimensions differ");

    const SupportHint& sup = f.support();
    const double ta = std::max(c.t0(), sup.t_lo);
    const double tb = std::min(c.t1(), sup.t_hi);
    if (!(tb > ta)) return 0.0;

    const Rule1D tr = time_rule(f, ta, tb, lvl);
    const SpatialNodes sn = spatial_nodes(f, c, lvl);
    if (sn.size() == 0 || tr.size() == 0) return 0.0;

    const double time_measure = c.time_extent();
    const double ball_measure = c.ball_volume();
    const bool p_inf = std::isinf(spec.p);
    const bool q_inf = std::isinf(spec.q);
    const bool norm = spec.normalized;

    if (spec.ordering == Ordering::SpaceInner) {
        double outer = 0.0;
        for (std::size_t j = 0; j < tr.size(); ++j) {
            double inner = 0.0;
            for (std::size_t i = 0; i < sn.size(); ++i) {
                const double m = f.magnitude(tr.x[j], sn.point(i));
                if (p_inf) {
                    inner = std::max(inner, m);
                } else if (m != 0.0) {
                    inner += sn.w[i] * std::pow(m, spec.p);
                }
            }
            const double inner_norm = p_inf ? inner : power_mean(inner, ball_measure, spec.p, norm);
            if (q_inf) {
                outer = std::max(outer, inner_norm);
            } else if (inner_norm != 0.0) {
                outer += tr.w[j] * std::pow(inner_norm, spec.q);
            }
        }
        return q_inf ? outer : power_mean(outer, time_measure, spec.q, norm);
    }

    double outer = 0.0;
    for (std::size_t i = 0; i < sn.size(); ++i) {
        double inner = 0.0;
        const auto x = sn.point(i);
        for (std::size_t j = 0; j < tr.size(); ++j) {
            const double m = f.magnitude(tr.x[j], x);
            if (q_inf) {
                inner = std::max(inner, m);
            } else if (m != 0.0) {
                inner += tr.w[j] * std::pow(m, spec.q);
            }
        }
        const double inner_norm = q_inf ? inner : power_mean(inner, time_measure, spec.q, norm);
        if (p_inf) {
            outer = std::max(outer, inner_norm);
        } else if (inner_norm != 0.0) {
            outer += sn.w[i] * std::pow(inner_norm, spec.p);
        }
    }
    return p_inf ? outer : power_mean(outer, ball_measure, spec.p, norm);
}

NormValue mixed_norm(const Field& f, const ParabolicCylinder& c, const NormSpec& spec, const QuadratureOptions& opt) {
    NormValue out;
    out.lower_bound = std::isinf(spec.p) || std::isinf(spec.q);
    std::vector<double> values;
    for (int level = opt.min_level; level <= opt.max_level; ++level) {
        const double v = mixed_norm_at_level(f, c, spec, QuadLevel{level});
        if (!std::isfinite(v))
            fail(ErrorKind::NonIntegrableSingularity, "quadrature produced a non-finite value for " + f.label());
        values.push_back(v);
        out.value = v;
        out.level = level;
        if (values.size() >= 2) {
            const double diff = std::abs(v - values[values.size() - 2]);
            out.error_estimate = diff;
            if (diff <= opt.rel_tol * std::max(std::abs(v), 1e-300) || v == 0.0) {
                out.converged = true;
                return out;
            }
        }
    }
    out.converged = values.size() < 2;
    if (values.size() >= 3) {
        // Successive refinements that keep increasing without shrinking increments
        // indicate that |f|^p is not integrable near a singular locus.
        bool growing = true;
        for (std::size_t k = 2; k < values.size(); ++k) {
            const double d1 = values[k - 1] - values[k - 2];
            const double d2 = values[k] - values[k - 1];
            if (!(d1 > 0.0 && d2 > 0.0 && d2 >= 0.5 * d1)) growing = false;
        }
        if (growing)
            fail(ErrorKind::NonIntegrableSingularity,
                 "refinements grow without bound for " + f.label() + " (last value " + std::to_string(out.value) + ")");
    }
    return out;
}

}  // namespace driftlab
