#include "driftlab/drift_zoo.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "driftlab/errors.hpp"

namespace driftlab {

std::string to_string(ZooKind k) { return k == ZooKind::DriftVector ? "drift-vector" : "test-scalar"; }

const std::vector<ZooEntry>& zoo_registry() {
    static const std::vector<ZooEntry> entries = {
        {"inverse_radial", ZooKind::DriftVector, "b = -eps d x/|x|^2, x != 0",
         "inverse-square radial drift; the scaled process collapses to the origin at eps = 1",
         {{"eps", 1.0, "drift strength"}}},
        {"example_12_21_4", ZooKind::DriftVector,
         "b = -eps t^-alpha |x|^-beta x/|x| on 0 < |x| <= 1, 0 < t <= 1",
         "time-weighted radial drift with alpha + beta = 1, 0 < alpha <= beta < 1; nonexistence for every eps > 0",
         {{"alpha", 0.5, "time exponent"}, {"beta", 0.5, "space exponent"}, {"eps", 1.0, "drift strength"}}},
        {"remark_1_28_1", ZooKind::TestScalar,
         "f = c |x|^-1 (|x|/sqrt t)^(1/(d+1)) on 0 < t < 1, |x| < 1",
         "field with finite time-inner mixed norms at every scale but no finite space-inner ones",
         {{"c", 1.0, "amplitude"}}},
        {"remark_1_28_1_drift", ZooKind::DriftVector,
         "b = -c |x|^-1 (|x|/sqrt t)^(1/(d+1)) x/|x| on 0 < t < 1, |x| < 1",
         "inward drift whose magnitude is the remark_1_28_1 field",
         {{"c", 1.0, "amplitude"}}},
        {"opening_example", ZooKind::DriftVector,
         "b = -c x/|x|^2 + c1 t^-gamma I(0 < t < 1) e_1, gamma < 1/2",
         "split drift with |b0| <= c|x|^-1 and h1 in L2; small c gives small drift functional",
         {{"c", 0.1, "radial strength"}, {"c1", 0.1, "temporal strength"}, {"gamma", 0.25, "time exponent, < 1/2"}}},
        {"constant", ZooKind::TestScalar, "f = value", "constant test function", {{"value", 1.0, "constant value"}}},
        {"constant_vector", ZooKind::DriftVector, "b = value e_1", "constant drift",
         {{"value", 1.0, "first component"}}},
        {"zero", ZooKind::DriftVector, "b = 0", "zero drift", {}},
        {"inverse_power", ZooKind::TestScalar, "f = c |x|^-a I(|x| <= radius)", "radial power singularity",
         {{"a", 1.0, "exponent"}, {"c", 1.0, "amplitude"}, {"radius", kInf, "truncation radius"}}},
        {"indicator_cylinder", ZooKind::TestScalar, "f = I_C, C = [t0, t0 + rho^2] x B_rho(x0 e_1)",
         "indicator of a parabolic cylinder",
         {{"t0", 0.0, "start time"}, {"rho", 1.0, "radius"}, {"x0", 0.0, "center offset along e_1"}}},
        {"ball_indicator", ZooKind::TestScalar, "f = I(|x| < radius)", "time-independent ball indicator",
         {{"radius", 0.5, "ball radius"}}},
        {"gaussian", ZooKind::TestScalar, "f = amp exp(-|x|^2 / (2 s^2))", "smooth bounded test function",
         {{"amp", 1.0, "amplitude"}, {"s", 1.0, "width"}}},
    };
    return entries;
}

const ZooEntry& zoo_entry(const std::string& name) {
    for (const ZooEntry& e : zoo_registry())
        if (e.name == name) return e;
    fail(ErrorKind::UnknownSpec, "unknown field '" + name + "'");
}

std::map<std::string, double> resolve_params(const DriftSpec& spec) {
    const ZooEntry& e = zoo_entry(spec.name);
    std::map<std::string, double> out;
    for (const ParamInfo& p : e.params) out[p.name] = p.default_value;
    out["d"] = 0.0;
    for (const auto& [k, v] : spec.params) {
        if (!out.count(k)) fail(ErrorKind::InvalidParams, spec.name + ": unknown parameter '" + k + "'");
        if (std::isnan(v)) fail(ErrorKind::InvalidParams, spec.name + ": parameter '" + k + "' is NaN");
        out[k] = v;
    }
    const auto bad = [&](const std::string& msg) { fail(ErrorKind::InvalidParams, spec.name + ": " + msg); };
    if (spec.name == "example_12_21_4") {
        const double a = out["alpha"], b = out["beta"];
        if (std::abs(a + b - 1.0) > 1e-12) bad("alpha + beta must equal 1");
        if (!(a > 0.0 && a <= b && b < 1.0)) bad("need 0 < alpha <= beta < 1");
    } else if (spec.name == "opening_example") {
        const double g = out["gamma"];
        if (!(g >= 0.0 && g < 0.5)) bad("gamma must lie in [0, 1/2)");
        if (out["c"] < 0.0 || out["c1"] < 0.0) bad("strengths must be nonnegative");
    } else if (spec.name == "inverse_power") {
        if (!(out["radius"] > 0.0)) bad("radius must be positive");
    } else if (spec.name == "indicator_cylinder") {
        if (!(out["rho"] > 0.0)) bad("rho must be positive");
    } else if (spec.name == "ball_indicator") {
        if (!(out["radius"] > 0.0)) bad("radius must be positive");
    } else if (spec.name == "gaussian") {
        if (!(out["s"] > 0.0)) bad("width must be positive");
    }
    const double d = out["d"];
    if (d != std::floor(d) || d < 0.0 || d > kMaxDim) bad("d must be an integer in [0, 8]");
    return out;
}

int resolve_dim(const DriftSpec& spec, const GlobalParams& params) {
    const auto p = resolve_params(spec);
    const int d = static_cast<int>(p.at("d"));
    return d > 0 ? d : params.d;
}

namespace {

Point origin(int d) { return Point(static_cast<std::size_t>(d), 0.0); }

Point unit_e1(int d) {
    Point e = origin(d);
    e[0] = 1.0;
    return e;
}

SupportHint unit_support(int d, double t_lo, double t_hi) {
    SupportHint s;
    s.t_lo = t_lo;
    s.t_hi = t_hi;
    s.center = origin(d);
    s.radius = 1.0;
    return s;
}

Field remark_field(FieldKind kind, int d, double c, const std::string& label) {
    const double k = 1.0 / (d + 1.0);
    FieldTraits tr;
    tr.singular.axes.push_back(origin(d));
    tr.singular.times.push_back(0.0);
    tr.support = unit_support(d, 0.0, 1.0);
    tr.label = label;
    const double sign = kind == FieldKind::Vector ? -1.0 : 1.0;
    RadialForm form{origin(d), [c, k, sign](double t, double r) {
                        if (!(t > 0.0 && t < 1.0 && r > 0.0 && r < 1.0)) return 0.0;
                        return sign * c / r * std::pow(r / std::sqrt(t), k);
                    }};
    return Field::radial(kind, d, std::move(form), std::move(tr));
}

}  // namespace

Field make_field(const DriftSpec& spec, const GlobalParams& params) {
    const auto p = resolve_params(spec);
    const int d = p.at("d") > 0 ? static_cast<int>(p.at("d")) : params.d;
    if (d < 1 || d > kMaxDim) fail(ErrorKind::InvalidParams, "dimension out of range");
    const std::string& n = spec.name;
    FieldTraits tr;
    tr.label = n;

    if (n == "inverse_radial") {
        const double amp = p.at("eps") * d;
        tr.singular.axes.push_back(origin(d));
        tr.time_independent = true;
        return Field::radial(FieldKind::Vector, d, RadialForm{origin(d), [amp](double, double r) { return -amp / r; }},
                             std::move(tr));
    }
    if (n == "example_12_21_4") {
        const double a = p.at("alpha"), b = p.at("beta"), eps = p.at("eps");
        tr.singular.axes.push_back(origin(d));
        tr.singular.times.push_back(0.0);
        tr.support = unit_support(d, 0.0, 1.0);
        RadialForm form{origin(d), [a, b, eps](double t, double r) {
                            if (!(t > 0.0 && t <= 1.0 && r > 0.0 && r <= 1.0)) return 0.0;
                            return -eps * std::pow(t, -a) * std::pow(r, -b);
                        }};
        return Field::radial(FieldKind::Vector, d, std::move(form), std::move(tr));
    }
    if (n == "remark_1_28_1") return remark_field(FieldKind::Scalar, d, p.at("c"), n);
    if (n == "remark_1_28_1_drift") return remark_field(FieldKind::Vector, d, p.at("c"), n);
    if (n == "opening_example") {
        const double c = p.at("c"), c1 = p.at("c1"), g = p.at("gamma");
        FieldTraits t0;
        t0.singular.axes.push_back(origin(d));
        t0.time_independent = true;
        t0.label = "radial part";
        Field b0 = Field::radial(FieldKind::Vector, d, RadialForm{origin(d), [c](double, double r) { return -c / r; }},
                                 std::move(t0));
        FieldTraits t1;
        if (g > 0.0) t1.singular.times.push_back(0.0);
        t1.support.t_lo = 0.0;
        t1.support.t_hi = 1.0;
        t1.label = "temporal part";
        Field b1 = Field::temporal(d, TimeForm{unit_e1(d), [c1, g](double t) {
                                                   return t > 0.0 && t < 1.0 ? c1 * std::pow(t, -g) : 0.0;
                                               }},
                                   std::move(t1));
        return Field::sum({b0, b1});
    }
    if (n == "constant") {
        const double v = p.at("value");
        tr.time_independent = true;
        return Field::scalar(d, [v](double, std::span<const double>) { return v; }, std::move(tr));
    }
    if (n == "constant_vector" || n == "zero") {
        const double v = n == "zero" ? 0.0 : p.at("value");
        tr.time_independent = true;
        return Field::temporal(d, TimeForm{unit_e1(d), [v](double) { return v; }}, std::move(tr));
    }
    if (n == "inverse_power") {
        const double a = p.at("a"), c = p.at("c"), R = p.at("radius");
        if (a > 0.0) tr.singular.axes.push_back(origin(d));
        tr.time_independent = true;
        if (R < kInf) {
            tr.support.center = origin(d);
            tr.support.radius = R;
        }
        return Field::radial(FieldKind::Scalar, d, RadialForm{origin(d), [a, c, R](double, double r) {
                                                         return r <= R ? c * std::pow(r, -a) : 0.0;
                                                     }},
                             std::move(tr));
    }
    if (n == "indicator_cylinder") {
        Point x0 = origin(d);
        x0[0] = p.at("x0");
        const ParabolicCylinder cyl(p.at("t0"), x0, p.at("rho"));
        tr.support.t_lo = cyl.t0();
        tr.support.t_hi = cyl.t1();
        tr.support.center = x0;
        tr.support.radius = cyl.rho();
        return Field::scalar(d, [cyl](double t, std::span<const double> x) { return cyl.contains(t, x) ? 1.0 : 0.0; },
                             std::move(tr));
    }
    if (n == "ball_indicator") {
        const double R = p.at("radius");
        tr.time_independent = true;
        tr.support.center = origin(d);
        tr.support.radius = R;
        return Field::radial(FieldKind::Scalar, d,
                             RadialForm{origin(d), [R](double, double r) { return r < R ? 1.0 : 0.0; }}, std::move(tr));
    }
    if (n == "gaussian") {
        const double amp = p.at("amp"), s = p.at("s");
        tr.time_independent = true;
        return Field::radial(FieldKind::Scalar, d, RadialForm{origin(d), [amp, s](double, double r) {
                                                         return amp * std::exp(-r * r / (2.0 * s * s));
                                                     }},
                             std::move(tr));
    }
    fail(ErrorKind::UnknownSpec, "no constructor for '" + n + "'");
}

std::optional<SeparablePower> separable_form(const DriftSpec& spec, const GlobalParams& params) {
    const auto p = resolve_params(spec);
    SeparablePower f;
    f.d = p.at("d") > 0 ? static_cast<int>(p.at("d")) : params.d;
    const std::string& n = spec.name;
    if (n == "inverse_radial") {
        f.amp = std::abs(p.at("eps")) * f.d;
        f.a = 1.0;
    } else if (n == "example_12_21_4") {
        f.amp = std::abs(p.at("eps"));
        f.a = p.at("beta");
        f.r_cut = 1.0;
        f.gamma = p.at("alpha");
        f.t_lo = 0.0;
        f.t_hi = 1.0;
    } else if (n == "remark_1_28_1" || n == "remark_1_28_1_drift") {
        // |x|^-1 (|x|/sqrt t)^k = |x|^-(1-k) t^-(k/2)
        const double k = 1.0 / (f.d + 1.0);
        f.amp = std::abs(p.at("c"));
        f.a = 1.0 - k;
        f.r_cut = 1.0;
        f.gamma = 0.5 * k;
        f.t_lo = 0.0;
        f.t_hi = 1.0;
    } else if (n == "constant" || n == "constant_vector") {
        f.amp = std::abs(p.at("value"));
    } else if (n == "zero") {
        f.amp = 0.0;
    } else if (n == "inverse_power") {
        f.amp = std::abs(p.at("c"));
        f.a = p.at("a");
        f.r_cut = p.at("radius");
    } else if (n == "ball_indicator") {
        f.r_cut = p.at("radius");
    } else if (n == "indicator_cylinder" && p.at("x0") == 0.0) {
        f.r_cut = p.at("rho");
        f.t_lo = p.at("t0");
        f.t_hi = p.at("t0") + p.at("rho") * p.at("rho");
    } else {
        return std::nullopt;
    }
    return f;
}

double radial_power_integral(int d, double c, double r, double e, double r_cut) {
    if (d < 1 || !(r > 0.0) || c < 0.0) fail(ErrorKind::InvalidParams, "radial_power_integral arguments");
    const double s_hi = std::min(c + r, r_cut);
    const double s_lo = std::abs(c - r);
    if (d == 1) {
        // integral of |x|^-e over [c - r, c + r] intersected with [-r_cut, r_cut]
        const double lo = std::max(c - r, -r_cut);
        const double hi = std::min(c + r, r_cut);
        if (!(hi > lo)) return 0.0;
        auto prim = [e](double u) {  // integral over [0, u] of x^-e, u >= 0
            if (u == 0.0) return 0.0;
            return std::abs(1.0 - e) < 1e-15 ? kInf : std::pow(u, 1.0 - e) / (1.0 - e);
        };
        if (lo < 0.0 && hi > 0.0 && e >= 1.0) return kInf;
        if (lo >= 0.0) return prim(hi) - prim(lo);
        if (hi <= 0.0) return prim(-lo) - prim(-hi);
        return prim(hi) + prim(-lo);
    }
    const double area = unit_sphere_area(d);
    double total = 0.0;
    // Shells fully inside the ball B_r(x0).
    if (c < r) {
        const double full = std::min(r - c, r_cut);
        if (full > 0.0) {
            if (e >= d) return kInf;
            total += area * std::pow(full, d - e) / (d - e);
        }
    }
    if (s_hi > s_lo && c > 0.0) {
        const double alpha = 0.5 * (d - 1.0);
        auto integrand = [&](double s) {
            double cos0 = (s * s + c * c - r * r) / (2.0 * c * s);
            cos0 = std::clamp(cos0, -1.0, 1.0);
            const double frac = boost::math::ibeta(alpha, alpha, 0.5 * (1.0 - cos0));
            return area * std::pow(s, d - 1.0 - e) * frac;
        };
        boost::math::quadrature::tanh_sinh<double> ts;
        total += ts.integrate(integrand, s_lo, s_hi, 1e-13);
    }
    return total;
}

std::optional<double> separable_power_norm(const SeparablePower& f, const ParabolicCylinder& c, const NormSpec& spec) {
    spec.validate();
    if (std::isinf(spec.p) || std::isinf(spec.q)) return std::nullopt;
    if (c.dim() != f.d) fail(ErrorKind::InvalidParams, "cylinder dimension mismatch");
    if (f.amp == 0.0) return 0.0;

    const double space = radial_power_integral(f.d, norm2(c.center()), c.rho(), f.a * spec.p, f.r_cut);

    const double ta = std::max(c.t0(), f.t_lo);
    const double tb = std::min(c.t1(), f.t_hi);
    double time = 0.0;
    if (tb > ta) {
        const double g = f.gamma * spec.q;
        if (g == 0.0) {
            time = tb - ta;
        } else {
            if (ta < 0.0) fail(ErrorKind::InvalidParams, "time power needs a nonnegative window");
            if (g >= 1.0 && ta == 0.0) {
                time = kInf;
            } else if (std::abs(g - 1.0) < 1e-15) {
                time = std::log(tb / ta);
            } else {
                time = (std::pow(tb, 1.0 - g) - std::pow(ta, 1.0 - g)) / (1.0 - g);
            }
        }
    }
    if (space == 0.0 || time == 0.0) return 0.0;
    const double sp = spec.normalized ? space / c.ball_volume() : space;
    const double tm = spec.normalized ? time / c.time_extent() : time;
    // For a product g(x) h(t) both orderings factor into the same product.
    return f.amp * std::pow(sp, 1.0 / spec.p) * std::pow(tm, 1.0 / spec.q);
}

std::optional<double> analytic_norm_oracle(const DriftSpec& spec, const ParabolicCylinder& c, const NormSpec& norm,
                                           const GlobalParams& params) {
    const auto form = separable_form(spec, params);
    if (!form) return std::nullopt;
    return separable_power_norm(*form, c, norm);
}

}  // namespace driftlab
