#include "driftlab/field.hpp"

#include <algorithm>
#include <cmath>

#include "driftlab/errors.hpp"

namespace driftlab {

ParabolicCylinder::ParabolicCylinder(double t0, Point center, double rho)
    : t0_(t0), center_(std::move(center)), rho_(rho) {
    if (!(rho_ > 0.0) || !std::isfinite(rho_)) fail(ErrorKind::EmptyCylinder, "cylinder radius must be positive");
    if (center_.empty() || static_cast<int>(center_.size()) > kMaxDim)
        fail(ErrorKind::EmptyCylinder, "cylinder center has unsupported dimension");
}

namespace {

void check_dim(int d) {
    if (d < 1 || d > kMaxDim) fail(ErrorKind::InvalidParams, "field dimension out of range");
}

bool same_point(const Point& a, const Point& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

SupportHint support_union(const std::vector<Field>& terms) {
    SupportHint out = terms.front().support();
    for (std::size_t k = 1; k < terms.size(); ++k) {
        const SupportHint& s = terms[k].support();
        out.t_lo = std::min(out.t_lo, s.t_lo);
        out.t_hi = std::max(out.t_hi, s.t_hi);
        if (!out.bounded_space() || !s.bounded_space()) {
            out.radius = kInf;
        } else {
            out.radius = std::max(out.radius, distance(out.center, s.center) + s.radius);
        }
    }
    return out;
}

}  // namespace

Field Field::vector(int d, VectorFn fn, FieldTraits traits) {
    check_dim(d);
    auto impl = std::make_shared<Impl>();
    impl->kind = FieldKind::Vector;
    impl->dim = d;
    impl->fn = std::move(fn);
    impl->mag = [f = impl->fn, d](double t, std::span<const double> x) {
        std::array<double, kMaxDim> buf{};
        f(t, x, std::span<double>(buf.data(), static_cast<std::size_t>(d)));
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += buf[i] * buf[i];
        return std::sqrt(s);
    };
    impl->traits = std::move(traits);
    Field out;
    out.impl_ = std::move(impl);
    return out;
}

Field Field::scalar(int d, ScalarFn fn, FieldTraits traits) {
    check_dim(d);
    auto impl = std::make_shared<Impl>();
    impl->kind = FieldKind::Scalar;
    impl->dim = d;
    impl->fn = [fn](double t, std::span<const double> x, std::span<double> out) { out[0] = fn(t, x); };
    impl->mag = [fn](double t, std::span<const double> x) { return std::abs(fn(t, x)); };
    impl->traits = std::move(traits);
    Field out;
    out.impl_ = std::move(impl);
    return out;
}

Field Field::radial(FieldKind kind, int d, RadialForm form, FieldTraits traits) {
    check_dim(d);
    if (static_cast<int>(form.center.size()) != d) fail(ErrorKind::InvalidParams, "radial center dimension mismatch");
    auto impl = std::make_shared<Impl>();
    impl->kind = kind;
    impl->dim = d;
    const Point c = form.center;
    const auto g = form.profile;
    if (kind == FieldKind::Scalar) {
        impl->fn = [c, g](double t, std::span<const double> x, std::span<double> out) {
            out[0] = g(t, distance(x, c));
        };
    } else {
        impl->fn = [c, g, d](double t, std::span<const double> x, std::span<double> out) {
            const double r = distance(x, c);
            if (r == 0.0) {
                for (int i = 0; i < d; ++i) out[i] = 0.0;
                return;
            }
            const double s = g(t, r) / r;
            for (int i = 0; i < d; ++i) out[i] = s * (x[i] - c[i]);
        };
    }
    impl->mag = [c, g, kind](double t, std::span<const double> x) {
        const double r = distance(x, c);
        if (kind == FieldKind::Vector && r == 0.0) return 0.0;
        return std::abs(g(t, r));
    };
    traits.radial = std::move(form);
    impl->traits = std::move(traits);
    Field out;
    out.impl_ = std::move(impl);
    return out;
}

Field Field::temporal(int d, TimeForm form, FieldTraits traits) {
    check_dim(d);
    if (static_cast<int>(form.direction.size()) != d) fail(ErrorKind::InvalidParams, "direction dimension mismatch");
    auto impl = std::make_shared<Impl>();
    impl->kind = FieldKind::Vector;
    impl->dim = d;
    const Point v = form.direction;
    const auto h = form.profile;
    const double vn = norm2(v);
    impl->fn = [v, h, d](double t, std::span<const double>, std::span<double> out) {
        const double s = h(t);
        for (int i = 0; i < d; ++i) out[i] = s * v[i];
    };
    impl->mag = [h, vn](double t, std::span<const double>) { return std::abs(h(t)) * vn; };
    traits.temporal = std::move(form);
    impl->traits = std::move(traits);
    Field out;
    out.impl_ = std::move(impl);
    return out;
}

Field Field::sum(std::vector<Field> terms) {
    if (terms.empty()) fail(ErrorKind::InvalidParams, "empty sum");
    if (terms.size() == 1) return terms.front();
    const FieldKind kind = terms.front().kind();
    const int d = terms.front().dim();
    for (const Field& f : terms)
        if (f.kind() != kind || f.dim() != d) fail(ErrorKind::InvalidParams, "sum of incompatible fields");

    FieldTraits traits;
    traits.support = support_union(terms);
    traits.time_independent = std::all_of(terms.begin(), terms.end(), [](const Field& f) { return f.time_independent(); });
    std::string label;
    for (const Field& f : terms) {
        for (const Point& p : f.singular().axes) {
            if (std::none_of(traits.singular.axes.begin(), traits.singular.axes.end(),
                             [&](const Point& q) { return same_point(p, q); }))
                traits.singular.axes.push_back(p);
        }
        for (double s : f.singular().times) {
            if (std::find(traits.singular.times.begin(), traits.singular.times.end(), s) == traits.singular.times.end())
                traits.singular.times.push_back(s);
        }
        label += (label.empty() ? "" : " + ") + f.label();
    }
    traits.label = label;

    // Sums of radial fields about a common center stay radial.
    const bool all_radial = std::all_of(terms.begin(), terms.end(), [&](const Field& f) {
        return f.traits().radial && same_point(f.traits().radial->center, terms.front().traits().radial
                                                                            ? terms.front().traits().radial->center
                                                                            : Point{});
    });
    if (all_radial) {
        std::vector<std::function<double(double, double)>> profiles;
        for (const Field& f : terms) profiles.push_back(f.traits().radial->profile);
        RadialForm form{terms.front().traits().radial->center, [profiles](double t, double r) {
                            double s = 0.0;
                            for (const auto& g : profiles) s += g(t, r);
                            return s;
                        }};
        Field out = radial(kind, d, std::move(form), std::move(traits));
        auto impl = std::make_shared<Impl>(*out.impl_);
        impl->terms = std::move(terms);
        out.impl_ = std::move(impl);
        return out;
    }

    auto impl = std::make_shared<Impl>();
    impl->kind = kind;
    impl->dim = d;
    std::vector<VectorFn> fns;
    for (const Field& f : terms) fns.push_back(f.impl_->fn);
    const int nc = kind == FieldKind::Scalar ? 1 : d;
    impl->fn = [fns, nc](double t, std::span<const double> x, std::span<double> out) {
        std::array<double, kMaxDim> buf{};
        for (int i = 0; i < nc; ++i) out[i] = 0.0;
        for (const auto& f : fns) {
            f(t, x, std::span<double>(buf.data(), static_cast<std::size_t>(nc)));
            for (int i = 0; i < nc; ++i) out[i] += buf[i];
        }
    };
    impl->mag = [fn = impl->fn, nc](double t, std::span<const double> x) {
        std::array<double, kMaxDim> buf{};
        fn(t, x, std::span<double>(buf.data(), static_cast<std::size_t>(nc)));
        double s = 0.0;
        for (int i = 0; i < nc; ++i) s += buf[i] * buf[i];
        return std::sqrt(s);
    };
    impl->traits = std::move(traits);
    impl->terms = std::move(terms);
    Field out;
    out.impl_ = std::move(impl);
    return out;
}

void Field::eval(double t, std::span<const double> x, std::span<double> out) const { impl_->fn(t, x, out); }

double Field::value(double t, std::span<const double> x) const {
    std::array<double, kMaxDim> buf{};
    impl_->fn(t, x, std::span<double>(buf.data(), static_cast<std::size_t>(components())));
    return buf[0];
}

double Field::magnitude(double t, std::span<const double> x) const { return impl_->mag(t, x); }

bool Field::in_support(double t, std::span<const double> x) const {
    const SupportHint& s = support();
    if (t < s.t_lo || t > s.t_hi) return false;
    if (s.bounded_space() && distance(x, s.center) > s.radius) return false;
    return true;
}

Field scaled(const Field& f, double c) {
    FieldTraits traits = f.traits();
    traits.label = std::to_string(c) + "*(" + f.label() + ")";
    if (f.traits().radial) {
        const auto g = f.traits().radial->profile;
        RadialForm form{f.traits().radial->center, [g, c](double t, double r) { return c * g(t, r); }};
        return Field::radial(f.kind(), f.dim(), std::move(form), std::move(traits));
    }
    if (f.traits().temporal) {
        const auto h = f.traits().temporal->profile;
        TimeForm form{f.traits().temporal->direction, [h, c](double t) { return c * h(t); }};
        return Field::temporal(f.dim(), std::move(form), std::move(traits));
    }
    if (!f.terms().empty()) {
        std::vector<Field> terms;
        for (const Field& g : f.terms()) terms.push_back(scaled(g, c));
        return Field::sum(std::move(terms));
    }
    if (f.kind() == FieldKind::Scalar) {
        return Field::scalar(f.dim(), [f, c](double t, std::span<const double> x) { return c * f.value(t, x); },
                             std::move(traits));
    }
    const int nc = f.components();
    return Field::vector(f.dim(),
                         [f, c, nc](double t, std::span<const double> x, std::span<double> out) {
                             f.eval(t, x, out);
                             for (int i = 0; i < nc; ++i) out[i] *= c;
                         },
                         std::move(traits));
}

Field difference(const Field& f, const Field& g) { return Field::sum({f, scaled(g, -1.0)}); }

Field restricted(const Field& f, const ParabolicCylinder& c) {
    if (c.dim() != f.dim()) fail(ErrorKind::InvalidParams, "restriction cylinder dimension mismatch");
    FieldTraits traits;
    traits.singular = f.singular();
    traits.time_independent = false;
    traits.label = f.label() + " restricted to C";
    SupportHint s = f.support();
    traits.support.t_lo = std::max(s.t_lo, c.t0());
    traits.support.t_hi = std::min(s.t_hi, c.t1());
    if (s.bounded_space() && distance(s.center, c.center()) + c.rho() > s.radius) {
        // keep the tighter of the two balls
        if (s.radius < c.rho()) {
            traits.support.center = s.center;
            traits.support.radius = s.radius;
        } else {
            traits.support.center = c.center();
            traits.support.radius = c.rho();
        }
    } else {
        traits.support.center = c.center();
        traits.support.radius = c.rho();
    }
    const int nc = f.components();
    auto fn = [f, c, nc](double t, std::span<const double> x, std::span<double> out) {
        if (!c.contains(t, x)) {
            for (int i = 0; i < nc; ++i) out[i] = 0.0;
            return;
        }
        f.eval(t, x, out);
    };
    if (f.kind() == FieldKind::Scalar) {
        return Field::scalar(
            f.dim(), [f, c](double t, std::span<const double> x) { return c.contains(t, x) ? f.value(t, x) : 0.0; },
            std::move(traits));
    }
    return Field::vector(f.dim(), std::move(fn), std::move(traits));
}

Field weighted(const Field& f, const Field& weight, std::string label) {
    FieldTraits traits = f.traits();
    traits.radial.reset();
    traits.temporal.reset();
    traits.time_independent = f.time_independent() && weight.time_independent();
    traits.label = std::move(label);
    const int nc = f.components();
    if (f.kind() == FieldKind::Scalar) {
        return Field::scalar(
            f.dim(), [f, weight](double t, std::span<const double> x) { return f.value(t, x) * weight.value(t, x); },
            std::move(traits));
    }
    return Field::vector(f.dim(),
                         [f, weight, nc](double t, std::span<const double> x, std::span<double> out) {
                             const double w = weight.value(t, x);
                             if (w == 0.0) {
                                 for (int i = 0; i < nc; ++i) out[i] = 0.0;
                                 return;
                             }
                             f.eval(t, x, out);
                             for (int i = 0; i < nc; ++i) out[i] *= w;
                         },
                         std::move(traits));
}

Field magnitude_field(const Field& f) {
    FieldTraits traits = f.traits();
    traits.temporal.reset();
    traits.label = "|" + f.label() + "|";
    if (f.traits().radial) {
        const auto g = f.traits().radial->profile;
        RadialForm form{f.traits().radial->center, [g](double t, double r) { return std::abs(g(t, r)); }};
        return Field::radial(FieldKind::Scalar, f.dim(), std::move(form), std::move(traits));
    }
    traits.radial.reset();
    return Field::scalar(f.dim(), [f](double t, std::span<const double> x) { return f.magnitude(t, x); },
                         std::move(traits));
}

}  // namespace driftlab
