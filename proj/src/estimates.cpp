#include "driftlab/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "driftlab/drift_zoo.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/mixed_norm.hpp"
#include "driftlab/parallel.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/scaling.hpp"
#include "driftlab/sup_search.hpp"

namespace driftlab {

namespace {

/// Derives an independent stream key for cell `i` of an experiment.
std::uint64_t cell_seed(std::uint64_t seed, std::uint64_t i) {
    const auto w = philox4x32({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32), 0xC0FFEEu, 0x5EEDu},
                              {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

nlohmann::json opt_json(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

nlohmann::json estimate_json(const Estimate& e) {
    return {{"mean", e.mean}, {"se", e.se}, {"ci_lo", e.ci_lo}, {"ci_hi", e.ci_hi}, {"n", e.n}, {"excluded", e.excluded}};
}

std::string fmt_num(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

Point origin(int d) { return Point(static_cast<std::size_t>(d), 0.0); }

}  // namespace

const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Bounded: return "bounded";
        case Verdict::ExponentMatch: return "exponent-match";
        case Verdict::Violated: return "violated";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& y_se) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) fail(ErrorKind::InvalidParams, "line fit needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) fail(ErrorKind::InvalidParams, "line fit needs distinct abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (y_se.size() == n) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += (x[i] - mx) * (x[i] - mx) * y_se[i] * y_se[i];
        f.slope_se = std::sqrt(v) / sxx;
    } else if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        f.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
    return f;
}

bool EstimateReport::all_checks_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

nlohmann::json to_json(const EstimateReport& r) {
    nlohmann::json j;
    j["name"] = r.name;
    j["citation"] = r.citation;
    j["swept"] = r.swept;
    j["verdict"] = to_string(r.verdict);
    nlohmann::json rows = nlohmann::json::array();
    const SweepRow* head = nullptr;
    for (const auto& row : r.sweep) {
        nlohmann::json o;
        o["label"] = row.label;
        o["param"] = row.param;
        o["lhs"] = row.lhs ? estimate_json(*row.lhs) : nlohmann::json(nullptr);
        o["rhs"] = opt_json(row.rhs);
        o["scale"] = opt_json(row.scale);
        o["ratio"] = opt_json(row.ratio);
        o["ratio_se"] = opt_json(row.ratio_se);
        nlohmann::json ex = nlohmann::json::object();
        for (const auto& [k, v] : row.extra) ex[k] = opt_json(v);
        o["extra"] = ex;
        o["flags"] = row.flags;
        rows.push_back(o);
        if (row.ratio && std::isfinite(*row.ratio) && (!head || *row.ratio > *head->ratio)) head = &row;
    }
    j["sweep"] = rows;
    if (head) {
        j["headline"] = {{"label", head->label},
                         {"lhs", head->lhs ? estimate_json(*head->lhs) : nlohmann::json(nullptr)},
                         {"rhs_norm", opt_json(head->rhs)},
                         {"scale_factor", opt_json(head->scale)},
                         {"ratio", opt_json(head->ratio)}};
    }
    if (r.fit) j["fit"] = {{"slope", r.fit->slope}, {"intercept", r.fit->intercept}, {"slope_se", r.fit->slope_se}};
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    j["checks"] = checks;
    j["summary"] = r.summary;
    j["notes"] = r.notes;
    return j;
}

std::string to_csv(const EstimateReport& r) {
    std::ostringstream os;
    os << "label,param,lhs_mean,lhs_se,lhs_ci_lo,lhs_ci_hi,lhs_n,rhs,scale,ratio,ratio_se";
    std::vector<std::string> extra_names;
    if (!r.sweep.empty())
        for (const auto& e : r.sweep.front().extra) extra_names.push_back(e.first);
    for (const auto& n : extra_names) os << ',' << n;
    os << ",flags\n";
    for (const auto& row : r.sweep) {
        std::vector<std::string> flags = row.flags;
        auto cell = [&](const char* name, std::optional<double> v) {
            os << ',';
            if (v && std::isfinite(*v))
                os << fmt_num(*v);
            else
                flags.push_back(std::string("missing:") + name);
        };
        std::string label = row.label;
        std::replace(label.begin(), label.end(), ',', ';');
        os << label;
        cell("param", row.param);
        if (row.lhs) {
            cell("lhs_mean", row.lhs->mean);
            cell("lhs_se", row.lhs->se);
            cell("lhs_ci_lo", row.lhs->ci_lo);
            cell("lhs_ci_hi", row.lhs->ci_hi);
            cell("lhs_n", static_cast<double>(row.lhs->n));
        } else {
            for (const char* n : {"lhs_mean", "lhs_se", "lhs_ci_lo", "lhs_ci_hi", "lhs_n"}) cell(n, std::nullopt);
        }
        cell("rhs", row.rhs);
        cell("scale", row.scale);
        cell("ratio", row.ratio);
        cell("ratio_se", row.ratio_se);
        for (const auto& n : extra_names) {
            std::optional<double> v;
            for (const auto& e : row.extra)
                if (e.first == n) v = e.second;
            cell(n.c_str(), v);
        }
        os << ',';
        for (std::size_t i = 0; i < flags.size(); ++i) os << (i ? ";" : "") << flags[i];
        os << '\n';
    }
    return os.str();
}

std::string to_table(const EstimateReport& r) {
    std::ostringstream os;
    os << r.name << "  [" << to_string(r.verdict) << "]\n" << r.citation << "\n\n";
    os << std::left << std::setw(28) << "cell" << std::right << std::setw(14) << "lhs" << std::setw(12) << "se"
       << std::setw(14) << "rhs" << std::setw(12) << "scale" << std::setw(14) << "ratio" << '\n';
    auto num = [&](std::optional<double> v, int w) {
        if (v && std::isfinite(*v))
            os << std::setw(w) << std::setprecision(6) << *v;
        else
            os << std::setw(w) << "-";
    };
    for (const auto& row : r.sweep) {
        os << std::left << std::setw(28) << row.label.substr(0, 27) << std::right;
        num(row.lhs ? std::optional<double>(row.lhs->mean) : std::nullopt, 14);
        num(row.lhs ? std::optional<double>(row.lhs->se) : std::nullopt, 12);
        num(row.rhs, 14);
        num(row.scale, 12);
        num(row.ratio, 14);
        os << '\n';
        for (const auto& [k, v] : row.extra) {
            os << "    " << std::left << std::setw(24) << k << std::right;
            num(v, 14);
            os << '\n';
        }
    }
    if (r.fit) os << "\nfit: slope " << r.fit->slope << " +- " << r.fit->slope_se << "\n";
    for (const auto& c : r.checks) os << (c.passed ? "[ok]   " : "[FAIL] ") << c.name << ": " << c.detail << '\n';
    for (const auto& n : r.notes) os << "note: " << n << '\n';
    return os.str();
}

namespace {

std::string xml_escape(const std::string& in) {
    std::string out;
    for (char c : in) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_svg(const std::vector<Series>& series, const PlotSpec& spec) {
    const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 55;
    double xlo = kInf, xhi = -kInf, ylo = kInf, yhi = -kInf;
    auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
    auto ok = [&](double v, bool lg) { return std::isfinite(v) && (!lg || v > 0.0); };
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!ok(s.x[i], spec.log_x) || !ok(s.y[i], spec.log_y)) continue;
            xlo = std::min(xlo, tx(s.x[i]));
            xhi = std::max(xhi, tx(s.x[i]));
            const double e = i < s.y_err.size() ? s.y_err[i] : 0.0;
            const double lo = s.y[i] - e, hi = s.y[i] + e;
            ylo = std::min(ylo, ty(ok(lo, spec.log_y) ? lo : s.y[i]));
            yhi = std::max(yhi, ty(hi));
        }
    if (!(xlo <= xhi)) xlo = 0, xhi = 1;
    if (!(ylo <= yhi)) ylo = 0, yhi = 1;
    if (xhi - xlo < 1e-12) xlo -= 0.5, xhi += 0.5;
    if (yhi - ylo < 1e-12) ylo -= 0.5, yhi += 0.5;
    const double padx = 0.05 * (xhi - xlo), pady = 0.08 * (yhi - ylo);
    xlo -= padx, xhi += padx, ylo -= pady, yhi += pady;
    auto px = [&](double v) { return L + (tx(v) - xlo) / (xhi - xlo) * (W - L - R); };
    auto py = [&](double v) { return H - B - (ty(v) - ylo) / (yhi - ylo) * (H - T - B); };
    auto f2 = [](double v) {
        std::ostringstream o;
        o << std::fixed << std::setprecision(2) << v;
        return o.str();
    };
    auto tick = [](double v) {
        std::ostringstream o;
        o << std::setprecision(3) << v;
        return o.str();
    };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(spec.title) << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xlo + (xhi - xlo) * i / 4.0, fy = ylo + (yhi - ylo) * i / 4.0;
        const double gx = L + (W - L - R) * i / 4.0, gy = H - B - (H - T - B) * i / 4.0;
        os << "<line x1=\"" << f2(gx) << "\" y1=\"" << H - B << "\" x2=\"" << f2(gx) << "\" y2=\"" << H - B + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << f2(gx) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
           << tick(spec.log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
        os << "<line x1=\"" << L - 5 << "\" y1=\"" << f2(gy) << "\" x2=\"" << L << "\" y2=\"" << f2(gy) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << L - 8 << "\" y=\"" << f2(gy + 4) << "\" text-anchor=\"end\">"
           << tick(spec.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xml_escape(spec.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (T + H - B) / 2
       << ")\">" << xml_escape(spec.y_label) << "</text>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* col = colors[si % 6];
        if (s.line) {
            os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (ok(s.x[i], spec.log_x) && ok(s.y[i], spec.log_y)) os << f2(px(s.x[i])) << ',' << f2(py(s.y[i])) << ' ';
            os << "\"/>\n";
        } else {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!ok(s.x[i], spec.log_x) || !ok(s.y[i], spec.log_y)) continue;
                const double e = i < s.y_err.size() ? s.y_err[i] : 0.0;
                if (e > 0.0) {
                    const double lo = ok(s.y[i] - e, spec.log_y) ? s.y[i] - e : s.y[i];
                    os << "<line x1=\"" << f2(px(s.x[i])) << "\" y1=\"" << f2(py(lo)) << "\" x2=\"" << f2(px(s.x[i]))
                       << "\" y2=\"" << f2(py(s.y[i] + e)) << "\" stroke=\"" << col << "\"/>\n";
                }
                os << "<circle cx=\"" << f2(px(s.x[i])) << "\" cy=\"" << f2(py(s.y[i])) << "\" r=\"3.5\" fill=\"" << col << "\"/>\n";
            }
        }
        os << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 15 * static_cast<double>(si) << "\" fill=\"" << col << "\">"
           << xml_escape(s.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Indicator norms

double ball_intersection_volume(int d, double r1, double r2, double dist) {
    if (dist >= r1 + r2) return 0.0;
    const double vd = unit_ball_volume(d);
    if (dist <= std::abs(r1 - r2)) return vd * std::pow(std::min(r1, r2), d);
    // Cap of a ball of radius r beyond a hyperplane at signed distance c from its center.
    auto cap = [&](double r, double c) {
        const double full = vd * std::pow(r, d);
        const double x = std::clamp(1.0 - c * c / (r * r), 0.0, 1.0);
        const double half_lens = 0.5 * full * boost::math::ibeta(0.5 * (d + 1), 0.5, x);
        return c >= 0.0 ? half_lens : full - half_lens;
    };
    const double c1 = (dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist);
    return cap(r1, c1) + cap(r2, dist - c1);
}

double indicator_norm(const ParabolicCylinder& ind, const ParabolicCylinder& c, const NormSpec& spec) {
    spec.validate();
    if (ind.dim() != c.dim()) fail(ErrorKind::InvalidParams, "cylinder dimensions differ");
    double L = std::max(0.0, std::min(ind.t1(), c.t1()) - std::max(ind.t0(), c.t0()));
    double V = ball_intersection_volume(c.dim(), c.rho(), ind.rho(), distance(c.center(), ind.center()));
    if (spec.normalized) {
        L /= c.time_extent();
        V /= c.ball_volume();
    }
    if (L <= 0.0 || V <= 0.0) return 0.0;
    const double sv = std::isinf(spec.p) ? 1.0 : std::pow(V, 1.0 / spec.p);
    const double st = std::isinf(spec.q) ? 1.0 : std::pow(L, 1.0 / spec.q);
    return sv * st;
}

// ---------------------------------------------------------------------------
// Krylov sweep

std::vector<KrylovMember> indicator_family(int d, const std::vector<double>& radii,
                                           const std::vector<std::pair<double, double>>& locations) {
    std::vector<KrylovMember> out;
    for (const auto& [t0, x0] : locations)
        for (double r : radii) {
            Point c = origin(d);
            c[0] = x0;
            const ParabolicCylinder cyl(t0, c, r);
            FieldTraits tr;
            tr.support = {cyl.t0(), cyl.t1(), c, r};
            std::ostringstream lab;
            lab << "I[C_" << r << "(" << t0 << "," << x0 << "e1)]";
            tr.label = lab.str();
            Field f = Field::scalar(d, [cyl](double t, std::span<const double> x) { return cyl.contains(t, x) ? 1.0 : 0.0; },
                                    tr);
            out.push_back({lab.str(), f, cyl});
        }
    return out;
}

double krylov_member_norm(const KrylovMember& m, const KrylovNorm& norm) {
    NormSpec spec = norm.spec;
    if (m.indicator) {
        if (!norm.beta) {
            if (!norm.domain) fail(ErrorKind::InvalidParams, "plain mixed norms need a domain cylinder");
            return indicator_norm(*m.indicator, *norm.domain, spec);
        }
        spec.normalized = true;
        SearchDomain dom;
        dom.d = m.indicator->dim();
        dom.rho_max = norm.rho_max;
        dom.support = {m.indicator->t0(), m.indicator->t1(), m.indicator->center(), m.indicator->rho()};
        const double beta = *norm.beta;
        const ParabolicCylinder ind = *m.indicator;
        const auto obj = [&](const ParabolicCylinder& c, const QuadratureOptions&) {
            return std::pow(c.rho(), beta) * indicator_norm(ind, c, spec);
        };
        return cylinder_sup_search(obj, dom, norm.search).value;
    }
    if (norm.beta) return morrey_norm(m.f, spec, *norm.beta, norm.rho_max, norm.search).value;
    if (!norm.domain) fail(ErrorKind::InvalidParams, "plain mixed norms need a domain cylinder");
    return mixed_norm(m.f, *norm.domain, spec).value;
}

EstimateReport krylov_sweep(const SdeProblem& problem, const std::vector<KrylovMember>& base,
                            const std::vector<KrylovMember>& extra, const KrylovNorm& norm, double T,
                            const MonteCarloOptions& mc) {
    if (base.empty()) fail(ErrorKind::InvalidParams, "empty test family");
    std::vector<KrylovMember> all = base;
    all.insert(all.end(), extra.begin(), extra.end());
    for (const auto& m : all)
        if (!m.f.valid() || m.f.kind() != FieldKind::Scalar || m.f.dim() != static_cast<int>(problem.x0.size()))
            fail(ErrorKind::InvalidParams, "family member '" + m.label + "' is not a scalar field of the right dimension");

    SimOptions so{mc.n_paths, mc.dt, T, mc.seed, mc.workers, std::nullopt};
    LazySource src(problem, so);
    const std::size_t k = all.size();
    const std::size_t du = problem.x0.size();
    const double dt = src.dt(), t0 = src.t0();
    std::vector<PathDiag> diags;
    const auto vals = per_path(
        src, k, mc.workers,
        [&](std::size_t, std::span<const double> s, const PathDiag&, std::span<double> out) {
            const std::size_t steps = s.size() / du - 1;
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t j = 0; j < steps; ++j) {
                const auto x = s.subspan(j * du, du);
                const double t = t0 + static_cast<double>(j) * dt;
                for (std::size_t m = 0; m < k; ++m) out[m] += dt * all[m].f.value(t, x);
            }
        },
        &diags);

    std::vector<double> norms(k);
    parallel_for(k, mc.workers, [&](std::size_t m) { norms[m] = krylov_member_norm(all[m], norm); });

    EstimateReport rep;
    rep.name = "krylov_sweep";
    rep.citation = "Krylov-type occupation bound: E int_0^T f(s, x_s) ds <= N ||f|| in the Morrey/mixed-norm scale";
    rep.swept = "test family member";
    double sup_base = 0.0, sup_all = 0.0;
    std::size_t arg_base = 0;
    std::vector<double> ratios(k, 0.0), ratio_se(k, 0.0);
    for (std::size_t m = 0; m < k; ++m) {
        const Estimate e = summarize(vals, diags, k, m);
        SweepRow row;
        row.label = all[m].label;
        row.param = all[m].indicator ? all[m].indicator->rho() : 0.0;
        row.lhs = e;
        row.rhs = norms[m];
        row.scale = 1.0;
        if (norms[m] > 0.0) {
            ratios[m] = e.mean / norms[m];
            ratio_se[m] = e.se / norms[m];
        } else if (e.mean != 0.0) {
            row.flags.push_back("zero-norm");
        }
        row.ratio = ratios[m];
        row.ratio_se = ratio_se[m];
        const bool in_base = m < base.size();
        row.extra = {{"in_base", in_base ? 1.0 : 0.0},
                     {"t0", all[m].indicator ? std::optional<double>(all[m].indicator->t0()) : std::nullopt},
                     {"x0", all[m].indicator ? std::optional<double>(all[m].indicator->center()[0]) : std::nullopt}};
        if (in_base && ratios[m] > sup_base) {
            sup_base = ratios[m];
            arg_base = m;
        }
        sup_all = std::max(sup_all, ratios[m]);
        rep.sweep.push_back(std::move(row));
    }
    const double change = sup_base > 0.0 ? (sup_all - sup_base) / sup_base : (sup_all > 0.0 ? kInf : 0.0);
    std::vector<std::string> exceed;
    for (std::size_t m = 0; m < k; ++m)
        if (ratios[m] - sup_base > 3.0 * ratio_se[m] && ratios[m] > sup_base) exceed.push_back(all[m].label);

    rep.checks.push_back({"sup stable under family doubling", change < 0.10,
                          "sup(base) = " + fmt_num(sup_base) + ", sup(enriched) = " + fmt_num(sup_all) +
                              ", relative change " + fmt_num(change)});
    rep.checks.push_back({"no ratio above the stabilized sup by more than 3 standard errors", exceed.empty(),
                          exceed.empty() ? "none" : std::to_string(exceed.size()) + " exceed, first " + exceed.front()});
    rep.verdict = rep.all_checks_pass() ? Verdict::Bounded : Verdict::Inconclusive;
    rep.summary = {{"sup_base", sup_base},
                   {"sup_enriched", sup_all},
                   {"relative_change", change},
                   {"argmax_base", all[arg_base].label},
                   {"base_size", base.size()},
                   {"enriched_size", k},
                   {"T", T},
                   {"paths", mc.n_paths},
                   {"dt", mc.dt},
                   {"flagged_paths", std::count_if(diags.begin(), diags.end(),
                                                   [](const PathDiag& g) { return g.status != PathStatus::Ok; })}};
    return rep;
}

// ---------------------------------------------------------------------------
// Exit-time bound

ExitTest exit_test_one(int d) {
    ExitTest t;
    t.label = "f = 1";
    t.make = [d](const ParabolicCylinder&) { return make_field({"constant", {{"d", static_cast<double>(d)}}}, GlobalParams{}); };
    t.norm = [](const ParabolicCylinder&, const NormSpec&) { return 1.0; };
    return t;
}

ExitTest exit_test_inner_half(int d) {
    ExitTest t;
    t.label = "f = indicator of C_{R/2}";
    t.make = [d](const ParabolicCylinder& c) {
        const ParabolicCylinder inner(c.t0(), c.center(), 0.5 * c.rho());
        FieldTraits tr;
        tr.support = {inner.t0(), inner.t1(), inner.center(), inner.rho()};
        tr.label = "inner half-cylinder indicator";
        return Field::scalar(d, [inner](double s, std::span<const double> x) { return inner.contains(s, x) ? 1.0 : 0.0; },
                             tr);
    };
    t.norm = [](const ParabolicCylinder& c, const NormSpec& spec) {
        return indicator_norm(ParabolicCylinder(c.t0(), c.center(), 0.5 * c.rho()), c, spec);
    };
    return t;
}

namespace {

void require_zero_drift(const SdeProblem& p) {
    const int d = static_cast<int>(p.x0.size());
    std::vector<double> out(static_cast<std::size_t>(d));
    for (int k = 0; k < 9; ++k) {
        Point x = p.x0;
        x[static_cast<std::size_t>(k % d)] += 0.25 * (k - 4);
        p.drift.eval(p.t0 + 0.1 * k, x, out);
        for (double v : out)
            if (v != 0.0) fail(ErrorKind::InvalidParams, "the exit-time bound is checked for zero drift only");
    }
}

}  // namespace

EstimateReport exit_bound_check(const std::vector<double>& radii, const SdeProblem& problem, const ExitTest& test,
                                const NormSpec& norm, const MonteCarloOptions& mc, double slope_tol) {
    if (radii.size() < 2) fail(ErrorKind::InvalidParams, "need at least two radii");
    require_zero_drift(problem);
    NormSpec spec = norm;
    spec.normalized = true;
    EstimateReport rep;
    rep.name = "exit_bound_check";
    rep.citation = "exit-time occupation bound for zero drift: E int_0^tau f(s, x_s) ds <= N R^2 avg ||f||_{L_{p,q}(C_R)}";
    rep.swept = "R";
    std::vector<double> lx, ly, lse;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const double R = radii[i];
        if (!(R > 0.0)) fail(ErrorKind::InvalidParams, "radii must be positive");
        const ParabolicCylinder c(problem.t0, problem.x0, R);
        SimOptions so{mc.n_paths, mc.dt * R * R, R * R, cell_seed(mc.seed, i), mc.workers, c};
        LazySource src(problem, so);
        const Field f = test.make(c);
        const Estimate lhs = occupation_functional(src, f, StopRule{c}, mc.workers);
        const double rhs = test.norm ? test.norm(c, spec) : mixed_norm(f, c, spec).value;
        SweepRow row;
        std::ostringstream lab;
        lab << "R=" << R;
        row.label = lab.str();
        row.param = R;
        row.lhs = lhs;
        row.rhs = rhs;
        row.scale = R * R;
        if (rhs > 0.0) {
            row.ratio = lhs.mean / (R * R * rhs);
            row.ratio_se = lhs.se / (R * R * rhs);
        }
        row.extra = {{"dt", so.dt}};
        if (lhs.mean > 0.0 && rhs > 0.0) {
            lx.push_back(std::log(R));
            ly.push_back(std::log(lhs.mean / rhs));
            lse.push_back(lhs.se / lhs.mean);
        } else {
            row.flags.push_back("excluded-from-fit");
        }
        rep.sweep.push_back(std::move(row));
    }
    if (lx.size() >= 2) {
        rep.fit = fit_line(lx, ly, lse);
        const double dev = rep.fit->slope - 2.0;
        const bool match = std::abs(dev) <= slope_tol;
        rep.checks.push_back({"slope of log(lhs / avg norm) against log R equals 2", match,
                              "slope " + fmt_num(rep.fit->slope) + " +- " + fmt_num(rep.fit->slope_se) + ", tolerance " +
                                  fmt_num(slope_tol)});
        if (match)
            rep.verdict = Verdict::ExponentMatch;
        else if (-dev > slope_tol && -dev > 3.0 * rep.fit->slope_se)
            rep.verdict = Verdict::Violated;
        else
            rep.verdict = Verdict::Inconclusive;
    } else {
        rep.checks.push_back({"slope fit", false, "fewer than two usable radii"});
    }
    rep.summary = {{"test", test.label}, {"paths", mc.n_paths}, {"dt_base", mc.dt}, {"p", spec.p}, {"q", spec.q},
                   {"ordering", to_string(spec.ordering)}};
    return rep;
}

// ---------------------------------------------------------------------------
// Barrier bound

Manufactured polynomial_barrier(int d, double R, int m, int n, const Point& x0, double c) {
    if (m < 1 || n < 1) fail(ErrorKind::InvalidParams, "barrier exponents must be at least 1");
    if (!(R > 0.0)) fail(ErrorKind::InvalidParams, "barrier radius must be positive");
    const double R2 = R * R;
    const double norm = c / std::pow(R, 2 * m + 2 * n);
    const std::size_t du = static_cast<std::size_t>(d);
    auto B = [x0, R2, du](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < du; ++i) s += (x[i] - x0[i]) * (x[i] - x0[i]);
        return R2 - s;
    };
    Manufactured u;
    std::ostringstream lab;
    lab << "u=(R^2-t)^" << m << "(R^2-|x|^2)^" << n;
    if (c != 1.0) lab << "*" << c;
    u.label = lab.str();
    u.u = [=](double t, std::span<const double> x) { return norm * std::pow(R2 - t, m) * std::pow(B(x), n); };
    u.u_t = [=](double t, std::span<const double> x) { return -norm * m * std::pow(R2 - t, m - 1) * std::pow(B(x), n); };
    u.hess = [=](double t, std::span<const double> x, std::span<double> h) {
        const double b = B(x);
        const double a = norm * std::pow(R2 - t, m);
        const double first = -2.0 * n * std::pow(b, n - 1);
        const double second = n >= 2 ? 4.0 * n * (n - 1) * std::pow(b, n - 2) : 0.0;
        for (std::size_t i = 0; i < du; ++i)
            for (std::size_t j = 0; j < du; ++j) {
                const double yi = x[i] - x0[i], yj = x[j] - x0[j];
                h[i * du + j] = a * (second * yi * yj + (i == j ? first : 0.0));
            }
    };
    return u;
}

Field barrier_operator(const Manufactured& u, int d, const DiffusionMatrixFn& a) {
    const std::size_t du = static_cast<std::size_t>(d);
    FieldTraits tr;
    tr.label = "L0 " + u.label;
    return Field::scalar(
        d,
        [u, a, du](double t, std::span<const double> x) {
            std::array<double, kMaxDim * kMaxDim> h{}, am{};
            u.hess(t, x, std::span<double>(h.data(), du * du));
            a(t, x, std::span<double>(am.data(), du * du));
            double s = u.u_t(t, x);
            for (std::size_t i = 0; i < du * du; ++i) s += am[i] * h[i];
            return s;
        },
        tr);
}

void check_boundary_vanishing(const Manufactured& u, const ParabolicCylinder& c, double tol) {
    const int d = c.dim();
    const double R = c.rho();
    std::vector<Point> lateral, top;
    for (int i = 0; i < d; ++i)
        for (double sgn : {-1.0, 1.0}) {
            Point x = c.center();
            x[static_cast<std::size_t>(i)] += sgn * R;
            lateral.push_back(x);
            Point y = c.center();
            y[static_cast<std::size_t>(i)] += 0.5 * sgn * R;
            top.push_back(y);
        }
    Point diag = c.center();
    for (auto& v : diag) v += R / std::sqrt(static_cast<double>(d));
    lateral.push_back(diag);
    top.push_back(c.center());
    auto probe = [&](double t, const Point& x) {
        const double v = u.u(t, x);
        if (!(std::abs(v) <= tol))
            fail(ErrorKind::BoundaryViolation, u.label + " is " + fmt_num(v) + " at a parabolic boundary point (t = " + fmt_num(t) + ")");
    };
    for (int k = 0; k <= 4; ++k)
        for (const auto& x : lateral) probe(c.t0() + c.time_extent() * k / 4.0, x);
    for (const auto& x : top) probe(c.t1(), x);
}

EstimateReport barrier_check(const std::vector<BarrierMember>& base, const std::vector<BarrierMember>& extra,
                             const std::vector<double>& radii, const Point& x0, const DiffusionMatrixFn& a,
                             const NormSpec& norm) {
    if (base.empty() || radii.empty()) fail(ErrorKind::InvalidParams, "empty barrier family or radius list");
    const int d = static_cast<int>(x0.size());
    NormSpec spec = norm;
    spec.normalized = true;
    std::vector<BarrierMember> all = base;
    all.insert(all.end(), extra.begin(), extra.end());
    EstimateReport rep;
    rep.name = "barrier_check";
    rep.citation = "barrier bound for L0 u = u_t + a^{ij} D_ij u: |u(0, x)| <= N R^2 avg ||L0 u||_{L_{p,q}(C_R)} for u vanishing on the parabolic boundary";
    rep.swept = "manufactured member x R";
    double cap_base = 0.0, cap_all = 0.0;
    double worst_spread = 1.0;
    for (std::size_t mi = 0; mi < all.size(); ++mi) {
        const auto& m = all[mi];
        double lo = kInf, hi = 0.0;
        for (double R : radii) {
            const ParabolicCylinder c(0.0, x0, R);
            const Manufactured u = polynomial_barrier(d, R, m.m, m.n, x0, m.c);
            check_boundary_vanishing(u, c);
            const double lhs = std::abs(u.u(0.0, x0));
            const double nv = mixed_norm(barrier_operator(u, d, a), c, spec).value;
            SweepRow row;
            std::ostringstream lab;
            lab << "m=" << m.m << ",n=" << m.n << ",R=" << R;
            row.label = lab.str();
            row.param = R;
            row.lhs = Estimate{lhs, 0.0, lhs, lhs, 1, 0};
            row.rhs = nv;
            row.scale = R * R;
            double ratio = 0.0;
            if (nv > 0.0)
                ratio = lhs / (R * R * nv);
            else if (lhs > 0.0)
                row.flags.push_back("zero-norm");
            row.ratio = ratio;
            row.extra = {{"m", static_cast<double>(m.m)}, {"n", static_cast<double>(m.n)}, {"c", m.c},
                         {"in_base", mi < base.size() ? 1.0 : 0.0}};
            if (mi < base.size()) cap_base = std::max(cap_base, ratio);
            cap_all = std::max(cap_all, ratio);
            if (ratio > 0.0) {
                lo = std::min(lo, ratio);
                hi = std::max(hi, ratio);
            }
            rep.sweep.push_back(std::move(row));
        }
        if (hi > 0.0) worst_spread = std::max(worst_spread, hi / lo);
    }
    const double change = cap_base > 0.0 ? (cap_all - cap_base) / cap_base : (cap_all > 0.0 ? kInf : 0.0);
    rep.checks.push_back({"ratios finite", std::isfinite(cap_all), "cap " + fmt_num(cap_all)});
    rep.checks.push_back({"cap stable under family doubling", change < 0.10,
                          "cap(base) = " + fmt_num(cap_base) + ", cap(enriched) = " + fmt_num(cap_all) + ", relative change " +
                              fmt_num(change)});
    rep.verdict = rep.all_checks_pass() ? Verdict::Bounded : Verdict::Inconclusive;
    rep.summary = {{"cap_base", cap_base},
                   {"cap_enriched", cap_all},
                   {"relative_change", change},
                   {"max_over_min_across_R", worst_spread},
                   {"p", spec.p},
                   {"q", spec.q},
                   {"ordering", to_string(spec.ordering)}};
    return rep;
}

// ---------------------------------------------------------------------------
// Collapse experiment and nonexistence scan

namespace {

struct CellStats {
    Estimate slope;
    Estimate end_second_moment;
    Estimate collar;
    Estimate near;
    double max_impulse = 0.0;
    std::size_t flagged = 0;
    std::uint64_t cap_hits = 0;
};

CellStats run_cell(const Field& drift, double width, const CollapseConfig& cfg, std::uint64_t seed) {
    const int d = cfg.d;
    const std::size_t du = static_cast<std::size_t>(d);
    SdeProblem p;
    p.drift = drift;
    p.sigma = Diffusion::scaled_identity(d, std::sqrt(2.0));
    p.x0 = origin(d);
    p.params.d = d;
    SimOptions so{cfg.n_paths, cfg.dt, cfg.T, seed, cfg.workers, std::nullopt};
    LazySource src(p, so);
    const std::size_t n = so.n_steps();
    const int nc = std::max(cfg.checkpoints, 2);
    std::vector<std::size_t> ks;
    std::vector<double> ts;
    for (int j = 0; j < nc; ++j) {
        const double t = cfg.T * (cfg.window_lo + (cfg.window_hi - cfg.window_lo) * j / (nc - 1));
        const auto k = std::min(n, static_cast<std::size_t>(std::llround(t / cfg.dt)));
        ks.push_back(k);
        ts.push_back(static_cast<double>(k) * cfg.dt);
    }
    double tm = 0.0;
    for (double t : ts) tm += t;
    tm /= nc;
    double sxx = 0.0;
    for (double t : ts) sxx += (t - tm) * (t - tm);
    const double collar = cfg.collar_factor * width;
    std::vector<PathDiag> diags;
    const auto vals = per_path(
        src, 4, cfg.workers,
        [&](std::size_t, std::span<const double> s, const PathDiag&, std::span<double> out) {
            double sy = 0.0;
            double last = 0.0;
            for (int j = 0; j < nc; ++j) {
                const double r2 = std::pow(norm2(s.subspan(ks[static_cast<std::size_t>(j)] * du, du)), 2);
                sy += (ts[static_cast<std::size_t>(j)] - tm) * r2;
                last = r2;
            }
            std::size_t in_collar = 0, in_near = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const double r = norm2(s.subspan(k * du, du));
                in_collar += r < collar;
                in_near += r < cfg.near_radius;
            }
            out[0] = sy / sxx;
            out[1] = last;
            out[2] = static_cast<double>(in_collar) / static_cast<double>(n);
            out[3] = static_cast<double>(in_near) / static_cast<double>(n);
        },
        &diags);
    CellStats st;
    st.slope = summarize(vals, diags, 4, 0);
    st.end_second_moment = summarize(vals, diags, 4, 1);
    st.collar = summarize(vals, diags, 4, 2);
    st.near = summarize(vals, diags, 4, 3);
    for (const auto& g : diags) {
        st.max_impulse = std::max(st.max_impulse, g.max_impulse);
        st.flagged += g.status != PathStatus::Ok;
        st.cap_hits += g.cap_hits;
    }
    return st;
}

/// Squared radius of the undisturbed radial dynamics, Y = |x|^2:
/// dY = 2d(1 - eps) dt + 2 sqrt(2 Y) dW, stepped with the positive part of Y.
Estimate radial_slope(int d, double eps, const CollapseConfig& cfg, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(std::llround(cfg.T / cfg.dt));
    const int nc = std::max(cfg.checkpoints, 2);
    std::vector<std::size_t> ks;
    std::vector<double> ts;
    for (int j = 0; j < nc; ++j) {
        const double t = cfg.T * (cfg.window_lo + (cfg.window_hi - cfg.window_lo) * j / (nc - 1));
        ks.push_back(std::min(n, static_cast<std::size_t>(std::llround(t / cfg.dt))));
        ts.push_back(static_cast<double>(ks.back()) * cfg.dt);
    }
    double tm = 0.0, sxx = 0.0;
    for (double t : ts) tm += t;
    tm /= nc;
    for (double t : ts) sxx += (t - tm) * (t - tm);
    std::vector<double> slope(cfg.n_paths);
    std::vector<PathDiag> diags(cfg.n_paths);
    const double drift = 2.0 * d * (1.0 - eps) * cfg.dt;
    const double sq = std::sqrt(cfg.dt);
    parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t i) {
        PathRng rng(seed, i);
        double y = 0.0, sy = 0.0;
        std::size_t j = 0;
        for (std::size_t k = 0; k <= n && j < ks.size(); ++k) {
            while (j < ks.size() && ks[j] == k) {
                sy += (ts[j] - tm) * y;
                ++j;
            }
            const double yp = std::max(y, 0.0);
            y = yp + drift + 2.0 * std::sqrt(2.0 * yp) * sq * rng.normal();
        }
        slope[i] = sy / sxx;
    });
    return summarize(slope, diags);
}

EstimateReport diffusion_cells(const std::string& name, const std::string& citation,
                               const std::function<Field(double width)>& unit_drift, const std::vector<double>& eps_sweep,
                               const std::vector<double>& widths, const CollapseConfig& cfg, bool exploratory) {
    if (eps_sweep.empty() || widths.empty()) fail(ErrorKind::InvalidParams, "empty epsilon or width sweep");
    if (!(cfg.window_lo >= 0.0 && cfg.window_lo < cfg.window_hi && cfg.window_hi <= 1.0))
        fail(ErrorKind::InvalidParams, "slope window must satisfy 0 <= lo < hi <= 1");
    for (double w : widths)
        if (!(w > 0.0)) fail(ErrorKind::InvalidParams, "mollification widths must be positive");
    EstimateReport rep;
    rep.name = name;
    rep.citation = citation;
    rep.swept = "eps x mollification width";
    std::vector<double> ws = widths;
    std::sort(ws.begin(), ws.end(), std::greater<>());

    struct Cell {
        double eps, width;
        CellStats st;
    };
    std::vector<Cell> cells;
    std::vector<Field> unit;
    for (double w : ws) unit.push_back(unit_drift(w));
    std::uint64_t idx = 0;
    for (double eps : eps_sweep)
        for (std::size_t wi = 0; wi < ws.size(); ++wi) {
            const Field drift = scaled(unit[wi], eps);
            cells.push_back({eps, ws[wi], run_cell(drift, ws[wi], cfg, cell_seed(cfg.seed, idx++))});
        }
    const int d = cfg.d;
    for (const auto& c : cells) {
        SweepRow row;
        std::ostringstream lab;
        lab << "eps=" << c.eps << ",w=" << c.width;
        row.label = lab.str();
        row.param = c.eps;
        row.lhs = c.st.slope;
        const double oracle = 2.0 * d * (1.0 - c.eps);
        if (!exploratory && c.eps < 1.0) {
            row.rhs = oracle;
            row.scale = 1.0;
            if (oracle != 0.0) {
                row.ratio = c.st.slope.mean / oracle;
                row.ratio_se = c.st.slope.se / std::abs(oracle);
            }
        }
        row.extra = {{"eps", c.eps},
                     {"width", c.width},
                     {"slope_se", c.st.slope.se},
                     {"second_moment_T", c.st.end_second_moment.mean},
                     {"collar_occupation", c.st.collar.mean},
                     {"collar_occupation_se", c.st.collar.se},
                     {"near_occupation", c.st.near.mean},
                     {"max_impulse", c.st.max_impulse},
                     {"flagged_paths", static_cast<double>(c.st.flagged)}};
        rep.sweep.push_back(std::move(row));
    }

    nlohmann::json per_eps = nlohmann::json::array();
    for (std::size_t e = 0; e < eps_sweep.size(); ++e) {
        const double eps = eps_sweep[e];
        const auto* first = &cells[e * ws.size()];
        bool slope_dec = true, collar_inc = true;
        for (std::size_t wi = 1; wi < ws.size(); ++wi) {
            slope_dec = slope_dec && first[wi].st.slope.mean < first[wi - 1].st.slope.mean;
            collar_inc = collar_inc && first[wi].st.collar.mean > first[wi - 1].st.collar.mean;
        }
        std::string slopes, collars;
        for (std::size_t wi = 0; wi < ws.size(); ++wi) {
            slopes += (wi ? ", " : "") + fmt_num(first[wi].st.slope.mean);
            collars += (wi ? ", " : "") + fmt_num(first[wi].st.collar.mean);
        }
        const auto& last = first[ws.size() - 1].st;
        nlohmann::json o = {{"eps", eps},
                            {"slope_at_smallest_width", last.slope.mean},
                            {"slope_se", last.slope.se},
                            {"slope_decreasing", slope_dec},
                            {"collar_increasing", collar_inc}};
        if (!exploratory) {
            const double oracle = 2.0 * d * (1.0 - eps);
            if (eps < 1.0) {
                const bool ok = std::abs(last.slope.mean - oracle) <= cfg.slope_tol * std::abs(oracle) + (oracle == 0.0 ? 3.0 * last.slope.se : 0.0);
                rep.checks.push_back({"eps=" + fmt_num(eps) + ": slope at width " + fmt_num(ws.back()) + " equals 2d(1-eps)", ok,
                                      "slope " + fmt_num(last.slope.mean) + " +- " + fmt_num(last.slope.se) + ", oracle " +
                                          fmt_num(oracle) + ", tolerance " + fmt_num(100 * cfg.slope_tol) + "%"});
                const Estimate rs = radial_slope(d, eps, cfg, cell_seed(cfg.seed, 1000000 + e));
                o["radial_crosscheck_slope"] = rs.mean;
                o["radial_crosscheck_se"] = rs.se;
            } else if (ws.size() > 1) {
                rep.checks.push_back({"eps=" + fmt_num(eps) + ": slope decreases as width shrinks", slope_dec, "slopes " + slopes});
                rep.checks.push_back({"eps=" + fmt_num(eps) + ": collar occupation increases as width shrinks", collar_inc, "collar occupations " + collars});
            }
        }
        per_eps.push_back(o);
    }
    if (exploratory) {
        // Halving eps at a fixed width should lower the collar occupation.
        for (std::size_t wi = 0; wi < ws.size(); ++wi) {
            std::vector<std::pair<double, double>> pts;
            for (std::size_t e = 0; e < eps_sweep.size(); ++e) pts.push_back({eps_sweep[e], cells[e * ws.size() + wi].st.collar.mean});
            std::sort(pts.begin(), pts.end());
            bool mono = true;
            for (std::size_t i = 1; i < pts.size(); ++i) mono = mono && pts[i].second >= pts[i - 1].second;
            rep.summary["collar_monotone_in_eps"].push_back({{"width", ws[wi]}, {"monotone", mono}});
        }
        rep.summary["exploratory"] = true;
        rep.verdict = Verdict::Inconclusive;
    } else {
        rep.verdict = rep.all_checks_pass() ? Verdict::ExponentMatch : Verdict::Inconclusive;
    }
    rep.summary["per_eps"] = per_eps;
    rep.summary["d"] = d;
    rep.summary["dt"] = cfg.dt;
    rep.summary["T"] = cfg.T;
    rep.summary["paths"] = cfg.n_paths;
    rep.summary["kernel"] = to_string(cfg.kernel);
    rep.summary["collar_factor"] = cfg.collar_factor;
    rep.summary["window"] = {cfg.window_lo * cfg.T, cfg.window_hi * cfg.T};
    return rep;
}

}  // namespace

EstimateReport collapse_experiment(const std::vector<double>& eps_sweep, const std::vector<double>& widths,
                                   const CollapseConfig& cfg) {
    const int d = cfg.d;
    GlobalParams gp;
    gp.d = d;
    const Field base = make_field({"inverse_radial", {{"eps", 1.0}}}, gp);
    auto unit = [&](double w) { return mollify_fast(base, MollifierKernel(cfg.kernel, w, d)); };
    auto rep = diffusion_cells("collapse_experiment",
                               "inverse-square radial drift eps(-d x/|x|^2), sigma = sqrt 2 I, x0 = 0: off the origin "
                               "d|x|^2 = 2d(1 - eps) dt + martingale; at eps = 1 the solution is identically zero",
                               unit, eps_sweep, widths, cfg, false);
    return rep;
}

EstimateReport nonexistence_scan(double alpha, const std::vector<double>& eps_sweep, const std::vector<double>& widths,
                                 const CollapseConfig& cfg) {
    const double beta = 1.0 - alpha;
    if (!(alpha > 0.0 && alpha <= beta && beta < 1.0))
        fail(ErrorKind::InvalidParams, "need 0 < alpha <= beta < 1 with alpha + beta = 1");
    const int d = cfg.d;
    GlobalParams gp;
    gp.d = d;
    const Field base = make_field({"example_12_21_4", {{"alpha", alpha}, {"beta", beta}, {"eps", 1.0}}}, gp);
    TableOptions topt;
    topt.workers = cfg.workers;
    auto unit = [&](double w) { return mollify_fast(base, MollifierKernel(cfg.kernel, w, d), topt); };
    auto rep = diffusion_cells("nonexistence_scan",
                               "time-weighted radial drift -eps t^-alpha |x|^-beta x/|x| with alpha + beta = 1: no "
                               "solution for any eps > 0; exploratory diagnostics only",
                               unit, eps_sweep, widths, cfg, true);
    rep.summary["alpha"] = alpha;
    rep.summary["beta"] = beta;
    return rep;
}

// ---------------------------------------------------------------------------
// Parabolic scaling

EstimateReport scaling_invariance_check(const Field& b, const Diffusion& sigma, double rho, const ScalingConfig& cfg) {
    if (!(rho > 0.0 && rho <= 1.0)) fail(ErrorKind::InvalidParams, "rho must lie in (0, 1]");
    const int d = b.dim();
    const std::size_t du = static_cast<std::size_t>(d);
    if (cfg.x0.size() != du) fail(ErrorKind::InvalidParams, "x0 dimension does not match the drift");

    SdeProblem px;
    px.drift = b;
    px.sigma = sigma;
    px.x0 = cfg.x0;
    px.params.d = d;
    px.drift_cap = cfg.drift_cap;

    SdeProblem py = px;
    py.drift = parabolic_scale(b, rho, ScaleKind::Drift);
    if (!sigma.is_constant()) {
        const Diffusion s = sigma;
        py.sigma = Diffusion::field(d, [s, rho](double t, std::span<const double> x, std::span<double> out) {
            std::array<double, kMaxDim> y{};
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = rho * x[i];
            s.eval(rho * rho * t, std::span<const double>(y.data(), x.size()), out);
        });
    }
    for (auto& v : py.x0) v /= rho;
    py.drift_cap = cfg.drift_cap / rho;

    SimOptions sx{cfg.n_paths, cfg.dt, cfg.T, cell_seed(cfg.seed, 0), cfg.workers, std::nullopt};
    SimOptions sy{cfg.n_paths, cfg.dt / (rho * rho), cfg.T / (rho * rho), cell_seed(cfg.seed, 1), cfg.workers, std::nullopt};
    LazySource src_x(px, sx), src_y(py, sy);
    const std::size_t n = sx.n_steps();
    const int nc = std::max(cfg.checkpoints, 1);
    std::vector<std::size_t> ks;
    for (int j = 1; j <= nc; ++j) ks.push_back(n * static_cast<std::size_t>(j) / static_cast<std::size_t>(nc));
    const std::size_t k = ks.size() * (du + 1);
    auto stats = [&](const PathSource& src, double scale, std::vector<PathDiag>& diags) {
        return per_path(
            src, k, cfg.workers,
            [&](std::size_t, std::span<const double> s, const PathDiag&, std::span<double> out) {
                for (std::size_t j = 0; j < ks.size(); ++j) {
                    double r2 = 0.0;
                    for (std::size_t i = 0; i < du; ++i) {
                        const double v = scale * s[ks[j] * du + i];
                        out[j * (du + 1) + i] = v;
                        r2 += v * v;
                    }
                    out[j * (du + 1) + du] = r2;
                }
            },
            &diags);
    };
    std::vector<PathDiag> dx, dy;
    const auto vx = stats(src_x, 1.0, dx);
    const auto vy = stats(src_y, rho, dy);

    EstimateReport rep;
    rep.name = "scaling_invariance_check";
    rep.citation = "parabolic scaling: x_t = rho y_{t/rho^2} with b~(t,x) = rho b(rho^2 t, rho x), sigma~(t,x) = sigma(rho^2 t, rho x)";
    rep.swept = "checkpoint time";
    double worst_z = 0.0;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        SweepRow row;
        const double t = static_cast<double>(ks[j]) * cfg.dt;
        std::ostringstream lab;
        lab << "t=" << t;
        row.label = lab.str();
        row.param = t;
        const Estimate ex = summarize(vx, dx, k, j * (du + 1) + du);
        const Estimate ey = summarize(vy, dy, k, j * (du + 1) + du);
        row.lhs = ex;
        row.rhs = ey.mean;
        row.scale = 1.0;
        if (ey.mean > 0.0) row.ratio = ex.mean / ey.mean;
        for (std::size_t i = 0; i <= du; ++i) {
            const Estimate a = summarize(vx, dx, k, j * (du + 1) + i);
            const Estimate c = summarize(vy, dy, k, j * (du + 1) + i);
            const double se = std::sqrt(a.se * a.se + c.se * c.se);
            const double z = se > 0.0 ? (a.mean - c.mean) / se : (a.mean == c.mean ? 0.0 : kInf);
            worst_z = std::max(worst_z, std::abs(z));
            row.extra.push_back({i < du ? "z_mean_x" + std::to_string(i + 1) : std::string("z_second_moment"), z});
        }
        rep.sweep.push_back(std::move(row));
    }
    rep.checks.push_back({"first and second moments agree within 3 standard errors", worst_z <= 3.0,
                          "largest |z| = " + fmt_num(worst_z)});
    if (cfg.check_norm) {
        const double lhs = drift_functional(py.drift, cfg.norm, 1.0, cfg.search).value;
        const double rhs = drift_functional(b, cfg.norm, rho, cfg.search).value;
        const double rel = rhs > 0.0 ? std::abs(lhs - rhs) / rhs : std::abs(lhs);
        rep.summary["b1_scaled"] = lhs;
        rep.summary["b_rho_original"] = rhs;
        rep.summary["norm_relative_difference"] = rel;
        rep.checks.push_back({"b_1(b~) equals b_rho(b)", rel <= cfg.norm_tol,
                              fmt_num(lhs) + " vs " + fmt_num(rhs) + ", relative difference " + fmt_num(rel)});
    }
    rep.verdict = rep.all_checks_pass() ? Verdict::ExponentMatch : Verdict::Inconclusive;
    rep.summary["rho"] = rho;
    rep.summary["paths"] = cfg.n_paths;
    rep.summary["dt"] = cfg.dt;
    rep.summary["flagged_paths"] = std::count_if(dx.begin(), dx.end(), [](const PathDiag& g) { return g.status != PathStatus::Ok; }) +
                                   std::count_if(dy.begin(), dy.end(), [](const PathDiag& g) { return g.status != PathStatus::Ok; });
    return rep;
}

}  // namespace driftlab
