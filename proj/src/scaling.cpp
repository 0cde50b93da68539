#include "driftlab/scaling.hpp"

#include <array>
#include <cmath>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

FieldTraits scaled_traits(const FieldTraits& in, double rho) {
    FieldTraits t = in;
    const double r2 = rho * rho;
    for (Point& a : t.singular.axes)
        for (double& v : a) v /= rho;
    for (double& s : t.singular.times) s /= r2;
    t.support.t_lo = in.support.t_lo / r2;
    t.support.t_hi = in.support.t_hi / r2;
    for (double& v : t.support.center) v /= rho;
    t.support.radius = in.support.radius / rho;
    t.radial.reset();
    t.temporal.reset();
    return t;
}

}  // namespace

Field parabolic_scale(const Field& f, double rho, ScaleKind kind) {
    if (!(rho > 0.0) || !std::isfinite(rho)) fail(ErrorKind::InvalidParams, "scale must be positive");
    const double amp = kind == ScaleKind::Drift ? rho : 1.0;
    const double r2 = rho * rho;
    const int d = f.dim();
    FieldTraits traits = scaled_traits(f.traits(), rho);
    traits.label = f.label() + " scaled by " + std::to_string(rho);

    if (!f.terms().empty() && !f.traits().radial) {
        std::vector<Field> terms;
        for (const Field& g : f.terms()) terms.push_back(parabolic_scale(g, rho, kind));
        return Field::sum(std::move(terms));
    }
    if (f.traits().radial) {
        const auto g = f.traits().radial->profile;
        Point c = f.traits().radial->center;
        for (double& v : c) v /= rho;
        RadialForm form{std::move(c), [g, amp, r2, rho](double t, double r) { return amp * g(r2 * t, rho * r); }};
        return Field::radial(f.kind(), d, std::move(form), std::move(traits));
    }
    if (f.traits().temporal) {
        const auto h = f.traits().temporal->profile;
        TimeForm form{f.traits().temporal->direction, [h, amp, r2](double t) { return amp * h(r2 * t); }};
        return Field::temporal(d, std::move(form), std::move(traits));
    }
    if (f.kind() == FieldKind::Scalar) {
        return Field::scalar(
            d,
            [f, amp, r2, rho, d](double t, std::span<const double> x) {
                std::array<double, kMaxDim> y{};
                for (int i = 0; i < d; ++i) y[i] = rho * x[i];
                return amp * f.value(r2 * t, std::span<const double>(y.data(), static_cast<std::size_t>(d)));
            },
            std::move(traits));
    }
    return Field::vector(
        d,
        [f, amp, r2, rho, d](double t, std::span<const double> x, std::span<double> out) {
            std::array<double, kMaxDim> y{};
            for (int i = 0; i < d; ++i) y[i] = rho * x[i];
            f.eval(r2 * t, std::span<const double>(y.data(), static_cast<std::size_t>(d)), out);
            for (int i = 0; i < d; ++i) out[i] *= amp;
        },
        std::move(traits));
}

}  // namespace driftlab
