#include "driftlab/mollifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "driftlab/errors.hpp"
#include "driftlab/parallel.hpp"

namespace driftlab {

const char* to_string(KernelKind k) noexcept {
    return k == KernelKind::SpaceTimeIsotropic ? "isotropic" : "parabolic";
}

KernelKind parse_kernel_kind(const std::string& s) {
    if (s == "isotropic" || s == "space_time_isotropic") return KernelKind::SpaceTimeIsotropic;
    if (s == "parabolic") return KernelKind::Parabolic;
    fail(ErrorKind::InvalidParams, "unknown kernel kind '" + s + "'");
}

double bump(double s) {
    const double u = 1.0 - s * s;
    return u > 0.0 ? std::exp(1.0 - 1.0 / u) : 0.0;
}

namespace {

// J_n = integral over [0, 1] of s^{n-1} bump(s) ds
double bump_moment(int n) {
    static const auto table = [] {
        std::array<double, kMaxDim + 2> j{};
        boost::math::quadrature::tanh_sinh<double> ts;
        for (int k = 1; k <= kMaxDim + 1; ++k)
            j[k] = ts.integrate([k](double s) { return std::pow(s, k - 1) * bump(s); }, 0.0, 1.0, 1e-15);
        return j;
    }();
    if (n < 1 || n > kMaxDim + 1) fail(ErrorKind::InvalidParams, "bump moment order out of range");
    return table[n];
}

double sphere_area_any(int d) { return d == 1 ? 2.0 : unit_sphere_area(d); }

}  // namespace

double unit_mass_radius(int n) {
    // The mass of bump(|z|/r) is r^n |S^{n-1}| J_n, so unit mass fixes r directly.
    return std::pow(sphere_area_any(n) * bump_moment(n), -1.0 / n);
}

MollifierKernel::MollifierKernel(KernelKind kind, double epsilon, int d)
    : kind_(kind), eps_(epsilon), d_(d), r_iso_(0.0), par_const_(0.0) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail(ErrorKind::InvalidParams, "kernel width must be positive");
    if (d < 1 || d > kMaxDim) fail(ErrorKind::InvalidParams, "kernel dimension out of range");
    r_iso_ = unit_mass_radius(d + 1);
    par_const_ = 1.0 / (bump_moment(1) * sphere_area_any(d) * bump_moment(d));
}

double MollifierKernel::base(double t, double y) const {
    if (kind_ == KernelKind::SpaceTimeIsotropic) return bump(std::sqrt(t * t + y * y) / r_iso_);
    if (!(t > -1.0 && t < 0.0) || !(y < 1.0)) return 0.0;
    return par_const_ * bump(2.0 * t + 1.0) * bump(y);
}

double MollifierKernel::scaled(double s, double y) const {
    if (kind_ == KernelKind::SpaceTimeIsotropic) return std::pow(eps_, -d_ - 1) * base(s / eps_, y / eps_);
    return std::pow(eps_, -d_ - 2) * base(s / (eps_ * eps_), y / eps_);
}

double MollifierKernel::s_lo() const {
    return kind_ == KernelKind::SpaceTimeIsotropic ? -eps_ * r_iso_ : -eps_ * eps_;
}

double MollifierKernel::s_hi() const { return kind_ == KernelKind::SpaceTimeIsotropic ? eps_ * r_iso_ : 0.0; }

double MollifierKernel::reach(double s) const {
    if (kind_ == KernelKind::SpaceTimeIsotropic) {
        const double R = eps_ * r_iso_;
        return s * s < R * R ? std::sqrt(R * R - s * s) : 0.0;
    }
    return s > -eps_ * eps_ && s < 0.0 ? eps_ : 0.0;
}

double MollifierKernel::max_reach() const { return kind_ == KernelKind::SpaceTimeIsotropic ? eps_ * r_iso_ : eps_; }

double MollifierKernel::time_reach() const { return std::max(std::abs(s_lo()), std::abs(s_hi())); }

double MollifierKernel::total_integral(int per_dim) const {
    const int n_axes = d_ + 1;
    int n = std::max(per_dim, 4);
    while (n > 4 && std::pow(static_cast<double>(n), n_axes) > 3e7) n -= 2;
    const double xr = max_reach();
    const Rule1D ts = composite_gauss(s_lo(), s_hi(), 2, n / 2);
    const Rule1D xs = composite_gauss(-xr, xr, 2, n / 2);
    std::vector<int> idx(static_cast<std::size_t>(d_), 0);
    double total = 0.0;
    for (std::size_t a = 0; a < ts.size(); ++a) {
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            double y2 = 0.0;
            double w = ts.w[a];
            for (int i = 0; i < d_; ++i) {
                y2 += xs.x[idx[i]] * xs.x[idx[i]];
                w *= xs.w[idx[i]];
            }
            total += w * scaled(ts.x[a], std::sqrt(y2));
            int j = d_ - 1;
            while (j >= 0 && ++idx[j] == static_cast<int>(xs.size())) {
                idx[j] = 0;
                --j;
            }
            if (j < 0) break;
        }
    }
    return total;
}

double truncation_profile(int d, double t, std::span<const double> x) {
    static const auto radii = [] {
        std::array<double, kMaxDim + 2> r{};
        for (int n = 2; n <= kMaxDim + 1; ++n) r[n] = unit_mass_radius(n);
        return r;
    }();
    double s = t * t;
    for (double v : x) s += v * v;
    return bump(std::sqrt(s) / radii[d + 1]);
}

// ---------------------------------------------------------------------------
// Generic route: tensor Gauss over the kernel support.

MollifiedValue mollify_at(const Field& f, const MollifierKernel& k, double t, std::span<const double> x,
                          const MollifyOptions& opt) {
    const int d = f.dim();
    if (k.dim() != d) fail(ErrorKind::InvalidParams, "kernel and field dimensions differ");
    const int nc = f.components();
    const double xr = k.max_reach();
    MollifiedValue out;
    out.value.assign(static_cast<std::size_t>(nc), 0.0);
    std::vector<std::vector<double>> history;
    std::array<double, kMaxDim> y{};
    std::array<double, kMaxDim> buf{};
    for (int level = 0; level <= opt.max_level; ++level) {
        const int panels = 2 << level;
        const int n = 4;
        const double nodes = std::pow(static_cast<double>(panels * n), d + 1);
        if (level > 0 && nodes > static_cast<double>(opt.max_points)) break;
        const Rule1D ts = composite_gauss(k.s_lo(), k.s_hi(), panels, n);
        const Rule1D xs = composite_gauss(-xr, xr, panels, n);
        std::vector<double> acc(static_cast<std::size_t>(nc), 0.0);
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        for (std::size_t a = 0; a < ts.size(); ++a) {
            const double s = ts.x[a];
            const double Y = k.reach(s);
            if (!(Y > 0.0)) continue;
            std::fill(idx.begin(), idx.end(), 0);
            while (true) {
                double y2 = 0.0;
                double w = ts.w[a];
                for (int i = 0; i < d; ++i) {
                    const double v = xs.x[idx[i]];
                    y2 += v * v;
                    w *= xs.w[idx[i]];
                    y[i] = x[i] - v;
                }
                if (y2 < Y * Y) {
                    const double kv = k.scaled(s, std::sqrt(y2));
                    if (kv != 0.0) {
                        f.eval(t - s, std::span<const double>(y.data(), static_cast<std::size_t>(d)),
                               std::span<double>(buf.data(), static_cast<std::size_t>(nc)));
                        for (int c = 0; c < nc; ++c) acc[c] += w * kv * buf[c];
                    }
                }
                int j = d - 1;
                while (j >= 0 && ++idx[j] == static_cast<int>(xs.size())) {
                    idx[j] = 0;
                    --j;
                }
                if (j < 0) break;
            }
        }
        for (double v : acc)
            if (!std::isfinite(v)) fail(ErrorKind::QuadratureFailure, "non-finite convolution value for " + f.label());
        history.push_back(acc);
        out.value = acc;
        out.level = level;
        if (history.size() >= 2) {
            const auto& prev = history[history.size() - 2];
            double diff = 0.0, mag = 0.0;
            for (int c = 0; c < nc; ++c) {
                diff = std::max(diff, std::abs(acc[c] - prev[c]));
                mag = std::max(mag, std::abs(acc[c]));
            }
            if (diff <= opt.rel_tol * mag + 1e-14) {
                out.converged = true;
                return out;
            }
        }
    }
    if (history.size() >= 4) {
        // Increments that do not decay under halving signal a non-integrable singularity.
        bool growing = true;
        auto mag = [](const std::vector<double>& v) {
            double m = 0.0;
            for (double c : v) m = std::max(m, std::abs(c));
            return m;
        };
        for (std::size_t i = 2; i < history.size(); ++i) {
            const double d1 = mag(history[i - 1]) - mag(history[i - 2]);
            const double d2 = mag(history[i]) - mag(history[i - 1]);
            if (!(d1 > 0.0 && d2 > 0.0 && d2 >= 0.8 * d1)) growing = false;
        }
        if (growing) fail(ErrorKind::QuadratureFailure, "convolution quadrature diverges for " + f.label());
    }
    return out;
}

namespace {

FieldTraits mollified_traits(const Field& f, const MollifierKernel& k, const std::string& tag) {
    FieldTraits tr;
    tr.time_independent = f.time_independent();
    tr.label = f.label() + " " + tag + " eps=" + std::to_string(k.epsilon());
    const SupportHint& s = f.support();
    tr.support.t_lo = s.t_lo + k.s_lo();
    tr.support.t_hi = s.t_hi + k.s_hi();
    if (s.bounded_space()) {
        tr.support.center = s.center;
        tr.support.radius = s.radius + k.max_reach();
    }
    return tr;
}

}  // namespace

Field mollify(const Field& f, const MollifierKernel& k, const MollifyOptions& opt) {
    FieldTraits tr = mollified_traits(f, k, "mollified");
    const int nc = f.components();
    if (f.kind() == FieldKind::Scalar) {
        return Field::scalar(
            f.dim(), [f, k, opt](double t, std::span<const double> x) { return mollify_at(f, k, t, x, opt).value[0]; },
            std::move(tr));
    }
    return Field::vector(f.dim(),
                         [f, k, opt, nc](double t, std::span<const double> x, std::span<double> out) {
                             const auto v = mollify_at(f, k, t, x, opt).value;
                             for (int c = 0; c < nc; ++c) out[c] = v[c];
                         },
                         std::move(tr));
}

// ---------------------------------------------------------------------------
// Reduced route for radial and temporal fields.

namespace {

struct RadialGeometry {
    std::vector<double> time_breaks;  // absolute times where the profile jumps or blows up
    std::vector<double> singular_times;
    bool singular_center = false;
    double cut = kInf;  // profile vanishes beyond this radius
};

RadialGeometry radial_geometry(const Field& f) {
    RadialGeometry g;
    const RadialForm& form = *f.traits().radial;
    for (const Point& a : f.singular().axes)
        if (distance(a, form.center) == 0.0) g.singular_center = true;
    g.singular_times = f.singular().times;
    g.time_breaks = g.singular_times;
    const SupportHint& s = f.support();
    if (s.t_lo > -kInf) g.time_breaks.push_back(s.t_lo);
    if (s.t_hi < kInf) g.time_breaks.push_back(s.t_hi);
    if (s.bounded_space() && distance(s.center, form.center) == 0.0) g.cut = s.radius;
    return g;
}

Rule1D piece_rule(double a, double b, bool ga, bool gb, QuadLevel lvl) {
    if (!(b > a)) return {};
    const int panels = 2 << lvl.level;
    if (!ga && !gb) return composite_gauss(a, b, panels, 8);
    // Graded quarter next to each singular end, smooth panels elsewhere.
    const double q = 0.25 * (b - a);
    const double lo = ga ? a + q : a;
    const double hi = gb ? b - q : b;
    Rule1D r;
    if (ga) r.append(graded_rule(a, lo, true, false, lvl));
    r.append(composite_gauss(lo, hi, panels, 8));
    if (gb) r.append(graded_rule(hi, b, false, true, lvl));
    return r;
}

// Rule on [a, b] split at `cuts`; pieces are graded toward flagged singular points.
Rule1D split_rule(double a, double b, std::vector<double> cuts, const std::vector<double>& singular, QuadLevel lvl) {
    Rule1D r;
    if (!(b > a)) return r;
    cuts.push_back(a);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> pts;
    for (double c : cuts)
        if (c >= a && c <= b && (pts.empty() || c > pts.back())) pts.push_back(c);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double lo = pts[i], hi = pts[i + 1];
        const double len = hi - lo;
        bool ga = false, gb = false;
        for (double s : singular) {
            if (s <= lo && lo - s <= 0.5 * len) ga = true;
            if (s >= hi && s - hi <= 0.5 * len) gb = true;
        }
        r.append(piece_rule(lo, hi, ga, gb, lvl));
    }
    return r;
}

}  // namespace

double radial_mollified_profile(const Field& f, const MollifierKernel& k, double t, double R, QuadLevel lvl) {
    if (!f.traits().radial) fail(ErrorKind::InvalidParams, "radial mollification needs a radial field");
    const int d = f.dim();
    const bool vec = f.kind() == FieldKind::Vector;
    const auto& g = f.traits().radial->profile;
    const RadialGeometry geo = radial_geometry(f);
    if (R < 0.0) R = -R;

    // s-rule: the profile is evaluated at time t - s.
    std::vector<double> s_cuts, s_sing;
    for (double tb : geo.time_breaks) s_cuts.push_back(t - tb);
    for (double ts : geo.singular_times) s_sing.push_back(t - ts);
    double s_a = k.s_lo(), s_b = k.s_hi();
    const SupportHint& sup = f.support();
    s_a = std::max(s_a, t - sup.t_hi);
    s_b = std::min(s_b, t - sup.t_lo);
    const Rule1D sr = f.time_independent() ? composite_gauss(k.s_lo(), k.s_hi(), 2 << lvl.level, 8)
                                           : split_rule(s_a, s_b, s_cuts, s_sing, lvl);

    const double area_theta = d >= 3 ? unit_sphere_area(d - 1) : 2.0;  // |S^{d-2}|, with |S^0| = 2
    const Rule1D unit_theta = composite_gauss(0.0, 1.0, 2 << lvl.level, 8);
    const std::vector<double> rho_sing = geo.singular_center ? std::vector<double>{0.0} : std::vector<double>{};

    double total = 0.0;
    for (std::size_t a = 0; a < sr.size(); ++a) {
        const double s = sr.x[a];
        const double Y = k.reach(s);
        if (!(Y > 0.0)) continue;
        const double ts = t - s;
        double inner = 0.0;
        if (R <= 1e-14 * Y) {
            if (vec) continue;
            const Rule1D rr = split_rule(0.0, std::min(Y, geo.cut), {}, rho_sing, lvl);
            for (std::size_t j = 0; j < rr.size(); ++j) {
                const double rho = rr.x[j];
                inner += rr.w[j] * std::pow(rho, d - 1) * k.scaled(s, rho) * g(ts, rho);
            }
            inner *= sphere_area_any(d);
        } else {
            const double lo = R >= Y ? R - Y : 0.0;
            const double hi = std::min(R + Y, geo.cut);
            const Rule1D rr = split_rule(lo, hi, {std::abs(R - Y), geo.cut}, rho_sing, lvl);
            for (std::size_t j = 0; j < rr.size(); ++j) {
                const double rho = rr.x[j];
                const double gv = g(ts, rho);
                if (gv == 0.0) continue;
                double theta_int = 0.0;
                if (d == 1) {
                    for (double sgn : {1.0, -1.0}) {
                        const double yy = std::abs(R - sgn * rho);
                        theta_int += k.scaled(s, yy) * (vec ? sgn : 1.0);
                    }
                } else {
                    const double cmin = (R * R + rho * rho - Y * Y) / (2.0 * R * rho);
                    const double th_max = cmin <= -1.0 ? std::numbers::pi : (cmin >= 1.0 ? 0.0 : std::acos(cmin));
                    if (!(th_max > 0.0)) continue;
                    for (std::size_t m = 0; m < unit_theta.size(); ++m) {
                        const double th = th_max * unit_theta.x[m];
                        const double c = std::cos(th);
                        const double y2 = R * R - 2.0 * R * rho * c + rho * rho;
                        const double kv = k.scaled(s, std::sqrt(std::max(y2, 0.0)));
                        double wt = th_max * unit_theta.w[m] * kv;
                        if (d > 2) wt *= std::pow(std::sin(th), d - 2);
                        if (vec) wt *= c;
                        theta_int += wt;
                    }
                    theta_int *= area_theta;
                }
                inner += rr.w[j] * std::pow(rho, d - 1) * gv * theta_int;
            }
        }
        total += sr.w[a] * inner;
    }
    if (!std::isfinite(total)) fail(ErrorKind::QuadratureFailure, "non-finite radial convolution for " + f.label());
    return total;
}

namespace {

// Nodes on [lo, hi] with spacing h_min at the breakpoints growing by `growth`
// per step away from them, capped at h_max.
std::vector<double> graded_nodes(double lo, double hi, const std::vector<double>& breaks, double h_min, double h_max,
                                 double growth) {
    std::vector<double> out;
    if (!(hi > lo)) {
        out.push_back(lo);
        return out;
    }
    auto spacing = [&](double x) {
        double dist = kInf;
        for (double b : breaks) dist = std::min(dist, std::abs(x - b));
        if (!std::isfinite(dist)) return h_max;
        return std::min(h_max, h_min + (growth - 1.0) * dist);
    };
    double x = lo;
    out.push_back(x);
    while (x < hi) {
        x = std::min(hi, x + spacing(x));
        if (hi - x < 0.25 * spacing(x)) x = hi;
        out.push_back(x);
    }
    return out;
}

// Four-point Lagrange weights at x on a sorted node array.
std::size_t stencil(const std::vector<double>& nodes, double x, std::array<double, 4>& w) {
    const std::size_t n = nodes.size();
    if (n == 1) {
        w = {1.0, 0.0, 0.0, 0.0};
        return 0;
    }
    std::size_t i = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin());
    i = i == 0 ? 0 : i - 1;
    const std::size_t m = std::min<std::size_t>(4, n);
    std::size_t start = i >= 1 ? i - 1 : 0;
    if (start + m > n) start = n - m;
    w = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < m; ++a) {
        double v = 1.0;
        for (std::size_t b = 0; b < m; ++b)
            if (a != b) v *= (x - nodes[start + b]) / (nodes[start + a] - nodes[start + b]);
        w[a] = v;
    }
    return start;
}

struct Table2D {
    std::vector<double> t;
    std::vector<double> r;
    std::vector<double> v;  // t-major

    double operator()(double tt, double rr) const {
        std::array<double, 4> wt{}, wr{};
        const std::size_t it = stencil(t, tt, wt);
        const std::size_t ir = stencil(r, rr, wr);
        double s = 0.0;
        for (std::size_t a = 0; a < 4 && it + a < t.size(); ++a) {
            if (wt[a] == 0.0) continue;
            for (std::size_t b = 0; b < 4 && ir + b < r.size(); ++b)
                s += wt[a] * wr[b] * v[(it + a) * r.size() + ir + b];
        }
        return s;
    }
};

std::vector<double> time_nodes(const Field& f, const MollifierKernel& k, const TableOptions& opt, double& t_lo,
                               double& t_hi) {
    const SupportHint& s = f.support();
    t_lo = s.t_lo + k.s_lo();
    t_hi = s.t_hi + k.s_hi();
    std::vector<double> breaks = f.singular().times;
    if (s.t_lo > -kInf) breaks.push_back(s.t_lo);
    if (s.t_hi < kInf) breaks.push_back(s.t_hi);
    const double tr = k.time_reach();
    return graded_nodes(t_lo, t_hi, breaks, tr / 8.0, (t_hi - t_lo) / opt.n_time, 1.1);
}

Field mollify_radial_table(const Field& f, const MollifierKernel& k, const TableOptions& opt) {
    const RadialForm& form = *f.traits().radial;
    const RadialGeometry geo = radial_geometry(f);
    const double reach = k.max_reach();
    const bool tind = f.time_independent();
    auto table = std::make_shared<Table2D>();

    // Full extent of the mollified field.
    double t_lo = -kInf, t_hi = kInf;
    if (!tind) {
        if (!f.support().bounded_time())
            fail(ErrorKind::InvalidParams, "tabulated mollification of a time-dependent field needs bounded time support");
        t_lo = f.support().t_lo + k.s_lo();
        t_hi = f.support().t_hi + k.s_hi();
    }
    const double r_end = geo.cut < kInf ? geo.cut + reach : kInf;

    // Tabulated box; a region restricts it to the (t, |x - center|) range the region covers.
    double tab_t_lo = t_lo, tab_t_hi = t_hi;
    double tab_r_lo = 0.0;
    double tab_r_hi = geo.cut < kInf ? r_end : opt.far_reaches * reach;
    std::vector<double> r_breaks{0.0};
    if (geo.cut < kInf) r_breaks.push_back(geo.cut);
    if (opt.region) {
        const ParabolicCylinder& c = *opt.region;
        const double off = distance(c.center(), form.center);
        tab_r_lo = std::max(0.0, off - c.rho());
        tab_r_hi = std::min(tab_r_hi, off + c.rho());
        if (!tind) {
            tab_t_lo = std::max(t_lo, c.t0());
            tab_t_hi = std::min(t_hi, c.t1());
        }
    }
    if (tind) {
        table->t = {0.0};
    } else {
        std::vector<double> breaks = f.singular().times;
        if (f.support().t_lo > -kInf) breaks.push_back(f.support().t_lo);
        if (f.support().t_hi < kInf) breaks.push_back(f.support().t_hi);
        table->t = graded_nodes(tab_t_lo, tab_t_hi, breaks, k.time_reach() / 8.0, (t_hi - t_lo) / opt.n_time, 1.1);
    }
    const double r_span = (geo.cut < kInf ? r_end : opt.far_reaches * reach);
    table->r = graded_nodes(tab_r_lo, tab_r_hi, r_breaks, reach / 8.0, r_span / opt.n_radius, 1.1);

    const std::size_t nt = table->t.size(), nr = table->r.size();
    table->v.assign(nt * nr, 0.0);
    parallel_for(nt * nr, opt.workers, [&](std::size_t i) {
        const double tt = table->t[i / nr];
        const double rr = table->r[i % nr];
        table->v[i] = radial_mollified_profile(f, k, tt, rr, opt.level);
    });

    const auto g = form.profile;
    const bool far_original = geo.cut == kInf && !opt.region;
    const QuadLevel lvl = opt.level;
    RadialForm out{form.center, [table, f, k, g, lvl, tind, far_original, t_lo, t_hi, r_end, tab_t_lo, tab_t_hi,
                                 tab_r_lo, tab_r_hi](double t, double r) {
                       if (!tind && (t < t_lo || t > t_hi)) return 0.0;
                       if (r > r_end) return 0.0;
                       const bool in_t = tind || (t >= tab_t_lo && t <= tab_t_hi);
                       if (in_t && r >= tab_r_lo && r <= tab_r_hi) return (*table)(tind ? 0.0 : t, r);
                       if (far_original && r > tab_r_hi) return g(t, r);
                       return radial_mollified_profile(f, k, t, r, lvl);
                   }};
    return Field::radial(f.kind(), f.dim(), std::move(out), mollified_traits(f, k, "radially mollified"));
}

// Time marginal of the scaled kernel.
double kernel_marginal(const MollifierKernel& k, double s) {
    const double Y = k.reach(s);
    if (!(Y > 0.0)) return 0.0;
    const int d = k.dim();
    const Rule1D& gl = gauss_legendre(24);
    double acc = 0.0;
    for (std::size_t i = 0; i < gl.size(); ++i) {
        const double rho = 0.5 * Y * (gl.x[i] + 1.0);
        acc += 0.5 * Y * gl.w[i] * std::pow(rho, d - 1) * k.scaled(s, rho);
    }
    return sphere_area_any(d) * acc;
}

Field mollify_temporal_table(const Field& f, const MollifierKernel& k, const TableOptions& opt) {
    const TimeForm& form = *f.traits().temporal;
    const auto h = form.profile;
    if (f.time_independent()) return f;
    if (!f.support().bounded_time())
        fail(ErrorKind::InvalidParams, "tabulated mollification of a time-dependent field needs bounded time support");
    double t_lo = 0.0, t_hi = 0.0;
    auto table = std::make_shared<Table2D>();
    table->r = {0.0};
    table->t = time_nodes(f, k, opt, t_lo, t_hi);
    table->v.assign(table->t.size(), 0.0);
    std::vector<double> breaks = f.singular().times;
    breaks.push_back(f.support().t_lo);
    breaks.push_back(f.support().t_hi);
    const std::vector<double> sing = f.singular().times;
    parallel_for(table->t.size(), opt.workers, [&](std::size_t i) {
        const double t = table->t[i];
        std::vector<double> cuts, ss;
        for (double b : breaks) cuts.push_back(t - b);
        for (double b : sing) ss.push_back(t - b);
        const double a = std::max(k.s_lo(), t - f.support().t_hi);
        const double b = std::min(k.s_hi(), t - f.support().t_lo);
        const Rule1D sr = split_rule(a, b, cuts, ss, opt.level);
        double acc = 0.0;
        for (std::size_t j = 0; j < sr.size(); ++j) acc += sr.w[j] * kernel_marginal(k, sr.x[j]) * h(t - sr.x[j]);
        table->v[i] = acc;
    });
    TimeForm out{form.direction, [table, t_lo, t_hi](double t) {
                     if (t < t_lo || t > t_hi) return 0.0;
                     return (*table)(t, 0.0);
                 }};
    FieldTraits tr = mollified_traits(f, k, "temporally mollified");
    return Field::temporal(f.dim(), std::move(out), std::move(tr));
}

}  // namespace

Field mollify_fast(const Field& f, const MollifierKernel& k, const TableOptions& opt) {
    if (k.dim() != f.dim()) fail(ErrorKind::InvalidParams, "kernel and field dimensions differ");
    if (f.traits().radial) return mollify_radial_table(f, k, opt);
    if (f.traits().temporal) return mollify_temporal_table(f, k, opt);
    if (!f.terms().empty()) {
        std::vector<Field> terms;
        for (const Field& g : f.terms()) terms.push_back(mollify_fast(g, k, opt));
        return Field::sum(std::move(terms));
    }
    return mollify(f, k);
}

Field truncate_support(const Field& f, double epsilon) {
    if (!(epsilon > 0.0)) fail(ErrorKind::InvalidParams, "truncation width must be positive");
    const int d = f.dim();
    const double reach = unit_mass_radius(d + 1) / epsilon;
    FieldTraits tr = f.traits();
    tr.radial.reset();
    tr.temporal.reset();
    tr.time_independent = false;
    tr.label = f.label() + " truncated eps=" + std::to_string(epsilon);
    tr.support.t_lo = std::max(tr.support.t_lo, -reach);
    tr.support.t_hi = std::min(tr.support.t_hi, reach);
    if (!tr.support.bounded_space() || norm2(tr.support.center) + tr.support.radius > reach) {
        tr.support.center = Point(static_cast<std::size_t>(d), 0.0);
        tr.support.radius = tr.support.bounded_space() ? std::min(reach, norm2(f.support().center) + f.support().radius)
                                                       : reach;
    }
    auto weight = [d, epsilon](double t, std::span<const double> x) {
        std::array<double, kMaxDim> z{};
        for (int i = 0; i < d; ++i) z[i] = epsilon * x[i];
        return truncation_profile(d, epsilon * t, std::span<const double>(z.data(), static_cast<std::size_t>(d)));
    };
    const int nc = f.components();
    if (f.kind() == FieldKind::Scalar) {
        return Field::scalar(
            d,
            [f, weight](double t, std::span<const double> x) {
                const double w = weight(t, x);
                return w == 0.0 ? 0.0 : w * f.value(t, x);
            },
            std::move(tr));
    }
    return Field::vector(d,
                         [f, weight, nc](double t, std::span<const double> x, std::span<double> out) {
                             const double w = weight(t, x);
                             if (w == 0.0) {
                                 for (int c = 0; c < nc; ++c) out[c] = 0.0;
                                 return;
                             }
                             f.eval(t, x, out);
                             for (int c = 0; c < nc; ++c) out[c] *= w;
                         },
                         std::move(tr));
}

ConvergenceReport convergence_report(const Field& f, const ParabolicCylinder& c, const NormSpec& spec, double beta,
                                     double beta_prime, const std::vector<double>& eps_ladder, KernelKind kind,
                                     const SearchOptions& search, const TableOptions& table) {
    if (eps_ladder.empty()) fail(ErrorKind::InvalidParams, "empty width ladder");
    ConvergenceReport rep;
    rep.hypothesis_warning = !(beta_prime > beta);
    for (double eps : eps_ladder) {
        const MollifierKernel k(kind, eps, f.dim());
        TableOptions topt = table;
        topt.region = c;
        const Field fe = mollify_fast(f, k, topt);
        const Field diff = restricted(difference(f, fe), c);
        ConvergenceRow row;
        row.epsilon = eps;
        row.morrey = morrey_norm(diff, spec, beta_prime, 1.0, search);
        rep.rows.push_back(std::move(row));
    }
    rep.strictly_decreasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (!(rep.rows[i].morrey.value < rep.rows[i - 1].morrey.value)) rep.strictly_decreasing = false;
    const double first = rep.rows.front().morrey.value;
    rep.last_over_first = first > 0.0 ? rep.rows.back().morrey.value / first : 0.0;
    return rep;
}

std::vector<ReplacementRow> replacement_diagnostic(const Field& b, const std::vector<double>& eps_ladder, KernelKind kind,
                                                   double R, double exponent, double t_lo, double t_hi, int n_t,
                                                   QuadLevel lvl, const TableOptions& table) {
    if (!(R > 0.0) || !(exponent > 0.0) || !(t_hi >= t_lo) || n_t < 1)
        fail(ErrorKind::InvalidParams, "replacement diagnostic needs R > 0, exponent > 0, t_lo <= t_hi, n_t >= 1");
    const int d = b.dim();
    const SphereRule sphere = sphere_rule(d, lvl);
    const Rule1D radial = graded_rule(0.0, R, true, false, lvl);
    std::vector<double> times(static_cast<std::size_t>(n_t));
    for (int j = 0; j < n_t; ++j) times[j] = n_t == 1 ? t_lo : t_lo + (t_hi - t_lo) * j / (n_t - 1.0);
    std::vector<ReplacementRow> out;
    for (double eps : eps_ladder) {
        const Field diff = difference(mollify_fast(b, MollifierKernel(kind, eps, d), table), b);
        std::vector<double> per_radius(radial.size());
        parallel_for(radial.size(), table.workers, [&](std::size_t i) {
            const double r = radial.x[i];
            std::vector<double> x(static_cast<std::size_t>(d));
            double acc = 0.0;
            for (std::size_t k = 0; k < sphere.size(); ++k) {
                for (int c = 0; c < d; ++c) x[c] = r * sphere.dir(k)[c];
                double m = 0.0;
                for (double t : times) m = std::max(m, diff.magnitude(t, x));
                acc += sphere.w[k] * std::pow(m, exponent);
            }
            per_radius[i] = radial.w[i] * std::pow(r, d - 1) * acc;
        });
        double total = 0.0;
        for (double v : per_radius) total += v;
        out.push_back({eps, total});
    }
    return out;
}

}  // namespace driftlab
