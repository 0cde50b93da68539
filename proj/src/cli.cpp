#include "driftlab/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <boost/algorithm/string.hpp>

#include "CLI11.hpp"

#include "driftlab/drift_zoo.hpp"
#include "driftlab/grid_field.hpp"
#include "driftlab/mixed_norm.hpp"
#include "driftlab/mollifier.hpp"
#include "driftlab/morrey.hpp"
#include "driftlab/simulator.hpp"

namespace fs = std::filesystem;

namespace driftlab {

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::ConfigInvalid:
        case ErrorKind::UnknownSpec:
        case ErrorKind::InvalidParams:
        case ErrorKind::EmptyCylinder:
            return kExitValidation;
        default:
            return kExitRuntime;
    }
}

namespace {

std::string iso_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) fail(ErrorKind::Io, "cannot write " + p.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed for " + p.string());
}

/// Collects settings while the config is parsed; experiments run only after
/// Config::finish() has accepted every key.
struct Context {
    Config& cfg;
    const RunOptions& opt;
    Budget budget;
    std::uint64_t seed = 1;
    bool budget_clamped = false;
    std::vector<std::string> notes;

    std::size_t paths(const std::string& section, std::size_t def) {
        const auto n = cfg.integer(section, "paths", static_cast<long long>(def));
        if (n <= 0) {
            cfg.error(section, "paths", "must be positive");
            return def;
        }
        auto v = static_cast<std::size_t>(n);
        if (v > budget.max_paths) {
            notes.push_back(section + ".paths clamped from " + std::to_string(v) + " to the budget " +
                            std::to_string(budget.max_paths));
            budget_clamped = true;
            v = budget.max_paths;
        }
        return v;
    }

    double positive(const std::string& section, const std::string& key, double def) {
        const double v = cfg.num(section, key, def);
        if (!(v > 0.0) || !std::isfinite(v)) cfg.error(section, key, "must be a positive number");
        return v;
    }
};

GlobalParams read_params(Config& cfg, int d_default = 3) {
    GlobalParams gp;
    gp.d = static_cast<int>(cfg.integer("params", "d", d_default));
    gp.d0 = cfg.num("params", "d0", 0.75 * gp.d);
    gp.delta = cfg.num("params", "delta", gp.delta);
    gp.beta0 = cfg.num("params", "beta0", gp.beta0);
    gp.beta0p = cfg.num("params", "beta0p", gp.beta0p);
    try {
        gp.validate();
    } catch (const LabError& e) {
        cfg.error("params", "*", e.what());
    }
    return gp;
}

NormSpec read_norm(Config& cfg, const std::string& sec, bool normalized_default = true) {
    NormSpec s;
    s.p = cfg.num(sec, "p", s.p);
    s.q = cfg.num(sec, "q", s.q);
    const auto ord = cfg.str(sec, "ordering", "space_inner");
    try {
        s.ordering = parse_ordering(ord);
    } catch (const LabError& e) {
        cfg.error(sec, "ordering", e.what());
    }
    s.normalized = cfg.flag(sec, "normalized", normalized_default);
    try {
        s.validate();
    } catch (const LabError& e) {
        cfg.error(sec, "p/q", e.what());
    }
    return s;
}

/// Field from [field]: either `grid = path` or `name = registry key` plus numeric parameters.
struct FieldChoice {
    std::optional<DriftSpec> spec;
    std::optional<std::string> grid;
};

FieldChoice read_field(Config& cfg, const std::string& sec = "field") {
    FieldChoice fc;
    if (auto g = cfg.opt_str(sec, "grid")) {
        fc.grid = *g;
        return fc;
    }
    const auto name = cfg.opt_str(sec, "name");
    if (!name) {
        cfg.error(sec, "name", "a registry name (see list-fields) or a grid file is required");
        return fc;
    }
    DriftSpec ds{*name, {}};
    for (const auto& [k, v] : cfg.rest(sec)) {
        double x = 0.0;
        try {
            std::size_t pos = 0;
            x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
        } catch (...) {
            if (v == "inf") {
                x = kInf;
            } else {
                cfg.error(sec, k, "expected a number");
                continue;
            }
        }
        ds.params[k] = x;
    }
    try {
        resolve_params(ds);
    } catch (const LabError& e) {
        cfg.error(sec, "name", e.what());
        return fc;
    }
    fc.spec = ds;
    return fc;
}

Field build_field(const FieldChoice& fc, const GlobalParams& gp) {
    if (fc.grid) return grid_to_field(read_grid(*fc.grid), *fc.grid);
    return make_field(*fc.spec, gp);
}

std::vector<std::pair<double, double>> read_pairs(Config& cfg, const std::string& sec, const std::string& key,
                                                  const std::vector<std::pair<double, double>>& def) {
    const auto s = cfg.opt_str(sec, key);
    if (!s) return def;
    std::vector<std::string> items;
    boost::algorithm::split(items, *s, boost::is_any_of(", "), boost::token_compress_on);
    std::vector<std::pair<double, double>> out;
    for (const auto& it : items) {
        if (it.empty()) continue;
        std::vector<std::string> ab;
        boost::algorithm::split(ab, it, boost::is_any_of(":"));
        try {
            if (ab.size() != 2) throw std::invalid_argument(it);
            out.push_back({std::stod(ab[0]), std::stod(ab[1])});
        } catch (...) {
            cfg.error(sec, key, "expected a list of a:b pairs, got '" + it + "'");
            return def;
        }
    }
    return out;
}

Point read_point(Config& cfg, const std::string& sec, const std::string& key, int d) {
    auto v = cfg.list(sec, key, std::vector<double>(static_cast<std::size_t>(d), 0.0));
    if (static_cast<int>(v.size()) != d) {
        cfg.error(sec, key, "expected " + std::to_string(d) + " coordinates");
        v.assign(static_cast<std::size_t>(d), 0.0);
    }
    return v;
}

KernelKind read_kernel(Config& cfg, const std::string& sec) {
    const auto k = cfg.str(sec, "kernel", "isotropic");
    try {
        return parse_kernel_kind(k);
    } catch (const LabError& e) {
        cfg.error(sec, "kernel", e.what());
        return KernelKind::SpaceTimeIsotropic;
    }
}

SearchOptions read_search(Config& cfg, const Context& ctx, int workers) {
    SearchOptions s;
    s.levels = static_cast<int>(cfg.integer("search", "levels", s.levels));
    s.top_k = static_cast<int>(cfg.integer("search", "top_k", s.top_k));
    s.max_sweeps = static_cast<int>(cfg.integer("search", "max_sweeps", s.max_sweeps));
    s.fine.rel_tol = cfg.num("search", "rel_tol", s.fine.rel_tol);
    s.fine.max_level = std::min(static_cast<int>(cfg.integer("search", "max_level", s.fine.max_level)), ctx.budget.max_quad_level);
    s.workers = workers;
    if (s.levels < 0 || s.top_k < 1 || s.max_sweeps < 1) cfg.error("search", "*", "levels >= 0, top_k >= 1, max_sweeps >= 1 required");
    return s;
}

/// Drift for simulations: the field itself, or its mollification when width > 0.
Field simulation_drift(const Field& b, double width, KernelKind kernel, int workers) {
    if (width <= 0.0) return b;
    TableOptions t;
    t.workers = workers;
    return mollify_fast(b, MollifierKernel(kernel, width, b.dim()), t);
}

// ---------------------------------------------------------------------------
// Experiments. Each parses its keys, calls cfg.finish(), then computes.

using Runner = std::function<std::vector<EstimateReport>()>;

Runner norm_experiment(Context& ctx) {
    Config& cfg = ctx.cfg;
    const GlobalParams gp = read_params(cfg);
    const FieldChoice fc = read_field(cfg);
    const NormSpec spec = read_norm(cfg, "norm");
    const std::string mode = cfg.str("norm", "mode", "cylinder");
    const double t0 = cfg.num("norm", "t0", 0.0);
    const int d = fc.spec ? resolve_dim(*fc.spec, gp) : gp.d;
    const Point x0 = read_point(cfg, "norm", "x0", d);
    const auto radii = cfg.list("norm", "radii", {1.0});
    const double beta = cfg.num("norm", "beta", gp.beta0);
    const double rho_max = cfg.num("norm", "rho_max", 1.0);
    const double oracle_tol = cfg.num("norm", "oracle_tol", 0.01);
    QuadratureOptions q;
    q.rel_tol = cfg.num("norm", "rel_tol", q.rel_tol);
    q.max_level = std::min(static_cast<int>(cfg.integer("norm", "max_level", q.max_level)), ctx.budget.max_quad_level);
    const SearchOptions search = read_search(cfg, ctx, ctx.opt.workers);
    if (mode != "cylinder" && mode != "morrey" && mode != "drift_functional")
        cfg.error("norm", "mode", "expected cylinder, morrey or drift_functional");
    for (double r : radii)
        if (!(r > 0.0)) cfg.error("norm", "radii", "radii must be positive");
    cfg.finish();
    return [=]() {
        const Field f = build_field(fc, gp);
        EstimateReport rep;
        rep.name = "norm";
        rep.swept = mode == "cylinder" ? "r" : "radius ceiling";
        bool all_ok = true, any_oracle = false;
        if (mode == "cylinder") {
            rep.citation = "iterated mixed norm L_{p,q} over the forward parabolic cylinder [t0, t0 + r^2] x B_r(x0)";
            for (double r : radii) {
                const ParabolicCylinder c(t0, x0, r);
                const NormValue v = mixed_norm(f, c, spec, q);
                SweepRow row;
                std::ostringstream lab;
                lab << "r=" << r;
                row.label = lab.str();
                row.param = r;
                row.rhs = v.value;
                std::optional<double> oracle;
                if (fc.spec) oracle = analytic_norm_oracle(*fc.spec, c, spec, gp);
                row.extra = {{"oracle", oracle},
                             {"relative_error", oracle && *oracle != 0.0 ? std::optional<double>(std::abs(v.value - *oracle) / *oracle) : std::nullopt},
                             {"error_estimate", v.error_estimate},
                             {"level", static_cast<double>(v.level)}};
                if (!v.converged) row.flags.push_back("not-converged");
                if (v.lower_bound) row.flags.push_back("lower-bound");
                if (oracle) {
                    any_oracle = true;
                    if (!(std::abs(v.value - *oracle) <= oracle_tol * std::abs(*oracle))) all_ok = false;
                }
                rep.sweep.push_back(std::move(row));
            }
        } else {
            rep.citation = mode == "morrey"
                               ? "Morrey norm: sup over cylinders of radius rho <= rho_max of rho^beta times the averaged L_{p,q} norm"
                               : "drift functional: sup over r <= rho of r times the averaged L_{p,q} norm of |b| on cylinders of radius r";
            for (double r : radii) {
                const SupResult s = mode == "morrey" ? morrey_norm(f, spec, beta, r * rho_max, search)
                                                     : drift_functional(f, spec, r, search);
                SweepRow row;
                std::ostringstream lab;
                lab << (mode == "morrey" ? "rho_max=" : "rho=") << r * (mode == "morrey" ? rho_max : 1.0);
                row.label = lab.str();
                row.param = r;
                row.rhs = s.value;
                row.extra = {{"argmax_r", s.argmax ? std::optional<double>(s.argmax->rho()) : std::nullopt},
                             {"argmax_t0", s.argmax ? std::optional<double>(s.argmax->t0()) : std::nullopt},
                             {"evaluations", static_cast<double>(s.evaluations)}};
                if (s.budget_exceeded) row.flags.push_back("search-budget-exceeded");
                if (s.unresolved_small_scale) row.flags.push_back("unresolved-small-scale");
                rep.sweep.push_back(std::move(row));
            }
        }
        if (any_oracle)
            rep.checks.push_back({"agreement with the closed-form norm", all_ok, "tolerance " + std::to_string(oracle_tol)});
        rep.verdict = any_oracle ? (all_ok ? Verdict::Bounded : Verdict::Inconclusive) : Verdict::Bounded;
        rep.summary = {{"field", fc.spec ? fc.spec->name : *fc.grid}, {"mode", mode}, {"p", spec.p}, {"q", spec.q},
                       {"ordering", to_string(spec.ordering)}, {"normalized", spec.normalized}};
        return std::vector<EstimateReport>{rep};
    };
}

Runner mollify_experiment(Context& ctx) {
    Config& cfg = ctx.cfg;
    const GlobalParams gp = read_params(cfg);
    const FieldChoice fc = read_field(cfg);
    const KernelKind kernel = read_kernel(cfg, "mollify");
    const auto eps = cfg.list("mollify", "epsilons", {0.1});
    const int level = static_cast<int>(cfg.integer("mollify", "table_level", 0));
    const std::string format = cfg.str("grid", "format", "text");
    const int d = fc.spec ? resolve_dim(*fc.spec, gp) : gp.d;
    GridData shape;
    shape.d = d;
    {
        const auto counts = cfg.list("grid", "counts", std::vector<double>(static_cast<std::size_t>(d + 1), 9.0));
        for (double c : counts) shape.counts.push_back(static_cast<std::int64_t>(c));
        shape.origin = cfg.list("grid", "origin", std::vector<double>(static_cast<std::size_t>(d + 1), -1.0));
        shape.spacing = cfg.list("grid", "spacing", std::vector<double>(static_cast<std::size_t>(d + 1), 0.25));
        if (shape.counts.size() != static_cast<std::size_t>(d + 1) || shape.origin.size() != static_cast<std::size_t>(d + 1) ||
            shape.spacing.size() != static_cast<std::size_t>(d + 1))
            cfg.error("grid", "counts/origin/spacing", "each needs d + 1 = " + std::to_string(d + 1) + " entries (time first)");
    }
    if (format != "text" && format != "binary") cfg.error("grid", "format", "expected text or binary");
    for (double e : eps)
        if (!(e > 0.0)) cfg.error("mollify", "epsilons", "widths must be positive");
    const bool conv = cfg.flag("convergence", "enabled", false);
    const double beta = cfg.num("convergence", "beta", 1.0);
    const double beta_p = cfg.num("convergence", "beta_prime", 1.2);
    const double ct0 = cfg.num("convergence", "t0", 0.5);
    const Point cx0 = conv ? read_point(cfg, "convergence", "x0", d) : Point(static_cast<std::size_t>(d), 0.0);
    const double cr = cfg.num("convergence", "r", 0.25);
    const NormSpec cspec = conv ? read_norm(cfg, "convergence") : NormSpec{};
    const SearchOptions search = read_search(cfg, ctx, ctx.opt.workers);
    const bool repl = cfg.flag("replacement", "enabled", false);
    const double rR = cfg.num("replacement", "R", 1.0);
    const double rexp = cfg.num("replacement", "exponent", gp.d0);
    const double rt_lo = cfg.num("replacement", "t_lo", 0.0);
    const double rt_hi = cfg.num("replacement", "t_hi", 1.0);
    const int rn_t = static_cast<int>(cfg.integer("replacement", "n_t", 17));
    cfg.finish();
    const std::string out = ctx.opt.out_dir;
    const int workers = ctx.opt.workers;
    return [=]() {
        const Field f = build_field(fc, gp);
        EstimateReport rep;
        rep.name = "mollify";
        rep.citation = "space-time mollification f^(eps) = f * zeta_eps";
        rep.swept = "eps";
        rep.verdict = Verdict::Bounded;
        TableOptions topt;
        topt.level = QuadLevel{level};
        topt.workers = workers;
        {
            // Only the table covering the sampled box is needed.
            Point c(static_cast<std::size_t>(d));
            double half2 = 0.0;
            for (int i = 0; i < d; ++i) {
                const double ext = shape.spacing[i + 1] * static_cast<double>(std::max<std::int64_t>(shape.counts[i + 1] - 1, 0));
                c[i] = shape.origin[i + 1] + 0.5 * ext;
                half2 += 0.25 * ext * ext;
            }
            const double span = shape.spacing[0] * static_cast<double>(std::max<std::int64_t>(shape.counts[0] - 1, 0));
            topt.region = ParabolicCylinder(shape.origin[0], c, std::max({std::sqrt(half2), std::sqrt(span), 1e-3}) * 1.001);
        }
        for (std::size_t i = 0; i < eps.size(); ++i) {
            const Field m = mollify_fast(f, MollifierKernel(kernel, eps[i], d), topt);
            const GridData g = sample_field(m, shape);
            const std::string name = "mollified_" + std::to_string(i) + (format == "text" ? ".grid" : ".bin");
            if (format == "text")
                write_grid_text(g, (fs::path(out) / name).string());
            else
                write_grid_binary(g, (fs::path(out) / name).string());
            double mx = 0.0;
            for (double v : g.values) mx = std::max(mx, std::abs(v));
            SweepRow row;
            row.label = name;
            row.param = eps[i];
            row.extra = {{"max_abs_sample", mx}, {"nodes", static_cast<double>(g.node_count())}};
            rep.sweep.push_back(std::move(row));
        }
        rep.summary = {{"kernel", to_string(kernel)}, {"format", format}};
        std::vector<EstimateReport> reps{rep};
        if (conv) {
            const ParabolicCylinder c(ct0, cx0, cr);
            TableOptions ct;
            ct.level = QuadLevel{level};
            ct.workers = workers;
            const ConvergenceReport cr_ = convergence_report(f, c, cspec, beta, beta_p, eps, kernel, search, ct);
            EstimateReport r2;
            r2.name = "mollifier_convergence";
            r2.citation = "Morrey-norm convergence of (f - f^(eps)) I_C to zero for beta' > beta";
            r2.swept = "eps";
            for (const auto& row : cr_.rows) {
                SweepRow s;
                std::ostringstream lab;
                lab << "eps=" << row.epsilon;
                s.label = lab.str();
                s.param = row.epsilon;
                s.rhs = row.morrey.value;
                s.extra = {{"argmax_r", row.morrey.argmax ? std::optional<double>(row.morrey.argmax->rho()) : std::nullopt}};
                if (row.morrey.budget_exceeded) s.flags.push_back("search-budget-exceeded");
                r2.sweep.push_back(std::move(s));
            }
            r2.checks.push_back({"strictly decreasing", cr_.strictly_decreasing, ""});
            r2.checks.push_back({"last below a tenth of first", cr_.last_over_first < 0.1,
                                 "ratio " + std::to_string(cr_.last_over_first)});
            if (cr_.hypothesis_warning) r2.notes.push_back("beta_prime <= beta: outside the regime where convergence is expected");
            r2.verdict = r2.all_checks_pass() ? Verdict::Bounded : Verdict::Inconclusive;
            r2.summary = {{"beta", beta}, {"beta_prime", beta_p}, {"last_over_first", cr_.last_over_first}};
            reps.push_back(std::move(r2));
        }
        if (repl) {
            EstimateReport r3;
            r3.name = "replacement_diagnostic";
            r3.citation = "replacement condition: int_{B_R} sup_t |b^(eps) - b|^{d0} dx -> 0 as eps -> 0";
            r3.swept = "eps";
            TableOptions rt;
            rt.level = QuadLevel{level};
            rt.workers = workers;
            for (const auto& row : replacement_diagnostic(f, eps, kernel, rR, rexp, rt_lo, rt_hi, rn_t, QuadLevel{1}, rt)) {
                SweepRow s;
                std::ostringstream lab;
                lab << "eps=" << row.epsilon;
                s.label = lab.str();
                s.param = row.epsilon;
                s.rhs = row.value;
                r3.sweep.push_back(std::move(s));
            }
            r3.verdict = Verdict::Inconclusive;
            r3.notes.push_back("diagnostic only: the sup over t is taken on a grid of " + std::to_string(rn_t) + " times");
            r3.summary = {{"R", rR}, {"exponent", rexp}, {"t_lo", rt_lo}, {"t_hi", rt_hi}};
            reps.push_back(std::move(r3));
        }
        return reps;
    };
}

struct SimSetup {
    FieldChoice fc;
    GlobalParams gp;
    int d = 3;
    double t0 = 0.0;
    Point x0;
    double sigma = 1.0;
    std::vector<double> sigma_matrix;
    double drift_cap = 0.0;
    double width = 0.0;
    double blowup = 1e8;
    KernelKind kernel = KernelKind::SpaceTimeIsotropic;
};

SimSetup read_sim(Context& ctx, const std::string& sec) {
    Config& cfg = ctx.cfg;
    SimSetup s;
    s.gp = read_params(cfg);
    s.fc = read_field(cfg);
    s.d = s.fc.spec ? resolve_dim(*s.fc.spec, s.gp) : s.gp.d;
    s.t0 = cfg.num(sec, "t0", 0.0);
    s.x0 = read_point(cfg, sec, "x0", s.d);
    s.sigma = cfg.num(sec, "sigma", 1.0);
    s.sigma_matrix = cfg.list(sec, "sigma_matrix", {});
    if (!s.sigma_matrix.empty() && s.sigma_matrix.size() != static_cast<std::size_t>(s.d * s.d))
        cfg.error(sec, "sigma_matrix", "needs d*d entries, row-major");
    s.drift_cap = cfg.num(sec, "drift_cap", 0.0);
    s.width = cfg.num(sec, "mollify_width", 0.0);
    s.blowup = cfg.num(sec, "blowup_bound", 1e8);
    s.kernel = read_kernel(cfg, sec);
    return s;
}

SdeProblem build_problem(const SimSetup& s, int workers) {
    SdeProblem p;
    GlobalParams gp = s.gp;
    gp.d = s.d;
    const Field b = build_field(s.fc, gp);
    if (b.kind() != FieldKind::Vector) fail(ErrorKind::InvalidParams, "the drift must be a vector field");
    p.drift = simulation_drift(b, s.width, s.kernel, workers);
    p.sigma = s.sigma_matrix.empty() ? Diffusion::scaled_identity(s.d, s.sigma) : Diffusion::matrix(s.d, s.sigma_matrix);
    p.t0 = s.t0;
    p.x0 = s.x0;
    p.params = gp;
    p.drift_cap = s.drift_cap;
    p.blowup_bound = s.blowup;
    return p;
}

Runner simulate_experiment(Context& ctx) {
    Config& cfg = ctx.cfg;
    const SimSetup s = read_sim(ctx, "simulate");
    const std::size_t n = ctx.paths("simulate", 1000);
    const double dt = ctx.positive("simulate", "dt", 1e-3);
    const double T = ctx.positive("simulate", "T", 1.0);
    const bool save = cfg.flag("simulate", "save_paths", true);
    const double bytes = static_cast<double>(n) * (T / dt + 1.0) * s.d * 8.0;
    if (save && bytes > 2e9) cfg.error("simulate", "save_paths", "ensemble would exceed 2 GB; set save_paths = false");
    cfg.finish();
    const std::uint64_t seed = ctx.seed;
    const int workers = ctx.opt.workers;
    const std::string out = ctx.opt.out_dir;
    return [=]() {
        const SdeProblem p = build_problem(s, workers);
        const SimOptions so{n, dt, T, seed, workers, std::nullopt};
        std::vector<double> vals;
        std::vector<PathDiag> diags;
        const std::size_t d = static_cast<std::size_t>(s.d);
        auto stat = [&](std::size_t, std::span<const double> st, const PathDiag&, std::span<double> o) {
            const auto last = st.subspan(st.size() - d, d);
            double r2 = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                o[i] = last[i];
                r2 += last[i] * last[i];
            }
            o[d] = r2;
        };
        std::uint64_t caps = 0;
        if (save) {
            const PathEnsemble ens = simulate(p, so);
            save_ensemble(ens, (fs::path(out) / "paths").string());
            vals = per_path(EnsembleSource(ens), d + 1, workers, stat, &diags);
            caps = ens.cap_hits();
        } else {
            vals = per_path(LazySource(p, so), d + 1, workers, stat, &diags);
            for (const auto& g : diags) caps += g.cap_hits;
        }
        EstimateReport rep;
        rep.name = "simulate";
        rep.citation = "Euler-Maruyama paths of dx = b dt + sigma dw";
        rep.swept = "statistic at T";
        rep.verdict = Verdict::Bounded;
        for (std::size_t i = 0; i <= d; ++i) {
            SweepRow row;
            row.label = i < d ? "E x_T[" + std::to_string(i + 1) + "]" : "E |x_T|^2";
            row.param = static_cast<double>(i);
            row.lhs = summarize(vals, diags, d + 1, i);
            rep.sweep.push_back(std::move(row));
        }
        std::size_t flagged = 0;
        for (const auto& g : diags) flagged += g.status != PathStatus::Ok;
        rep.summary = {{"paths", n}, {"dt", dt}, {"T", T}, {"flagged_paths", flagged}, {"cap_hits", caps},
                       {"mollify_width", s.width}, {"saved", save}};
        return std::vector<EstimateReport>{rep};
    };
}

Runner verify_experiment(Context& ctx) {
    Config& cfg = ctx.cfg;
    const std::string check = cfg.str("experiment", "check", "");
    const int workers = ctx.opt.workers;
    const std::uint64_t seed = ctx.seed;
    if (check == "exit-bound") {
        const int d = static_cast<int>(cfg.integer("exit", "d", 3));
        const auto radii = cfg.list("exit", "radii", {0.25, 0.5, 1.0});
        const std::string test = cfg.str("exit", "test", "one");
        const NormSpec spec = read_norm(cfg, "exit");
        MonteCarloOptions mc{ctx.paths("exit", 50000), ctx.positive("exit", "dt", 1e-3), seed, workers};
        const double tol = cfg.num("exit", "slope_tol", 0.05);
        const Point x0 = read_point(cfg, "exit", "x0", d);
        if (test != "one" && test != "inner-half") cfg.error("exit", "test", "expected one or inner-half");
        cfg.finish();
        return [=]() {
            SdeProblem p;
            GlobalParams gp;
            gp.d = d;
            p.drift = make_field({"zero", {{"d", static_cast<double>(d)}}}, gp);
            p.sigma = Diffusion::scaled_identity(d, 1.0);
            p.x0 = x0;
            p.params = gp;
            const ExitTest t = test == "one" ? exit_test_one(d) : exit_test_inner_half(d);
            return std::vector<EstimateReport>{exit_bound_check(radii, p, t, spec, mc, tol)};
        };
    }
    if (check == "krylov") {
        const SimSetup s = read_sim(ctx, "krylov");
        const double T = ctx.positive("krylov", "T", 1.0);
        MonteCarloOptions mc{ctx.paths("krylov", 20000), ctx.positive("krylov", "dt", 1e-3), seed, workers};
        const auto radii = cfg.list("krylov", "radii", {1.0, 0.5, 0.25, 0.125});
        const auto locs = read_pairs(cfg, "krylov", "locations", {{0.0, 0.0}, {0.25, 0.5}});
        const auto extra_radii = cfg.list("krylov", "extra_radii", {});
        const auto extra_locs = read_pairs(cfg, "krylov", "extra_locations", locs);
        KrylovNorm kn;
        kn.spec = read_norm(cfg, "krylov");
        if (cfg.flag("krylov", "morrey", true)) kn.beta = cfg.num("krylov", "beta", s.gp.beta0);
        kn.rho_max = cfg.num("krylov", "rho_max", 1.0);
        kn.search = read_search(cfg, ctx, workers);
        if (!kn.beta) kn.domain = ParabolicCylinder(0.0, Point(static_cast<std::size_t>(s.d), 0.0), cfg.num("krylov", "domain_r", 2.0));
        const auto adm = admissible(kn.spec.p, kn.spec.q, s.gp, kn.spec.ordering);
        if (!adm.admissible) cfg.error("krylov", "p/q", "not admissible: " + adm.diagnostic);
        cfg.finish();
        return [=]() {
            const SdeProblem p = build_problem(s, workers);
            const auto base = indicator_family(s.d, radii, locs);
            const auto extra = extra_radii.empty() ? std::vector<KrylovMember>{} : indicator_family(s.d, extra_radii, extra_locs);
            return std::vector<EstimateReport>{krylov_sweep(p, base, extra, kn, T, mc)};
        };
    }
    if (check == "barrier") {
        const int d = static_cast<int>(cfg.integer("barrier", "d", 3));
        auto members = [&](const std::string& key, std::vector<std::pair<double, double>> def) {
            std::vector<BarrierMember> out;
            for (const auto& [m, n] : read_pairs(cfg, "barrier", key, def)) {
                if (m < 1 || n < 1 || m != std::floor(m) || n != std::floor(n)) cfg.error("barrier", key, "exponents must be integers >= 1");
                out.push_back({static_cast<int>(m), static_cast<int>(n), 1.0});
            }
            return out;
        };
        const auto base = members("members", {{1, 1}, {1, 2}, {2, 1}, {2, 2}, {3, 3}});
        const auto extra = members("extra_members", {{1, 3}, {3, 1}, {2, 3}, {3, 2}, {4, 4}});
        const auto radii = cfg.list("barrier", "radii", {0.25, 0.5, 1.0});
        const NormSpec spec = read_norm(cfg, "barrier");
        const Point x0 = read_point(cfg, "barrier", "x0", d);
        const double a_scale = cfg.num("barrier", "a", 1.0);
        cfg.finish();
        return [=]() {
            const DiffusionMatrixFn a = [a_scale](double, std::span<const double> x, std::span<double> o) {
                const std::size_t n = x.size();
                for (std::size_t i = 0; i < n * n; ++i) o[i] = 0.0;
                for (std::size_t i = 0; i < n; ++i) o[i * n + i] = a_scale;
            };
            return std::vector<EstimateReport>{barrier_check(base, extra, radii, x0, a, spec)};
        };
    }
    if (check == "collapse") {
        CollapseConfig c;
        c.d = static_cast<int>(cfg.integer("collapse", "d", 3));
        const auto eps = cfg.list("collapse", "eps", {0.25, 1.0});
        const auto widths = cfg.list("collapse", "widths", {1e-2, 1e-3, 1e-4});
        c.dt = ctx.positive("collapse", "dt", c.dt);
        c.T = ctx.positive("collapse", "T", c.T);
        c.n_paths = ctx.paths("collapse", c.n_paths);
        c.kernel = read_kernel(cfg, "collapse");
        c.checkpoints = static_cast<int>(cfg.integer("collapse", "checkpoints", c.checkpoints));
        c.collar_factor = ctx.positive("collapse", "collar_factor", c.collar_factor);
        c.near_radius = ctx.positive("collapse", "near_radius", c.near_radius);
        c.slope_tol = ctx.positive("collapse", "slope_tol", c.slope_tol);
        c.seed = seed;
        c.workers = workers;
        cfg.finish();
        return [=]() { return std::vector<EstimateReport>{collapse_experiment(eps, widths, c)}; };
    }
    if (check == "scaling") {
        const GlobalParams gp = read_params(cfg);
        const FieldChoice fc = read_field(cfg);
        const int d = fc.spec ? resolve_dim(*fc.spec, gp) : gp.d;
        ScalingConfig sc;
        const double rho = cfg.num("scaling", "rho", 0.5);
        sc.x0 = read_point(cfg, "scaling", "x0", d);
        sc.T = ctx.positive("scaling", "T", sc.T);
        sc.dt = ctx.positive("scaling", "dt", sc.dt);
        sc.n_paths = ctx.paths("scaling", sc.n_paths);
        sc.drift_cap = cfg.num("scaling", "drift_cap", std::sqrt(sc.dt));
        sc.check_norm = cfg.flag("scaling", "check_norm", true);
        sc.norm = read_norm(cfg, "scaling");
        sc.norm_tol = cfg.num("scaling", "norm_tol", 0.01);
        sc.search = read_search(cfg, ctx, workers);
        const double sigma = cfg.num("scaling", "sigma", 1.0);
        sc.seed = seed;
        sc.workers = workers;
        cfg.finish();
        return [=]() {
            GlobalParams g = gp;
            g.d = d;
            const Field b = build_field(fc, g);
            return std::vector<EstimateReport>{scaling_invariance_check(b, Diffusion::scaled_identity(d, sigma), rho, sc)};
        };
    }
    if (check == "modulus") {
        const int d = static_cast<int>(cfg.integer("modulus", "d", 2));
        const std::size_t n = ctx.paths("modulus", 100000);
        const double dt = ctx.positive("modulus", "dt", 1e-3);
        const double T = ctx.positive("modulus", "T", 1.0);
        const auto gaps = cfg.list("modulus", "gaps", {0.125, 0.25, 0.5, 1.0});
        const double order = cfg.num("modulus", "order", 2.0);
        const double tol = cfg.num("modulus", "slope_tol", 0.05);
        for (double g : gaps)
            if (!(g > 0.0 && g <= T)) cfg.error("modulus", "gaps", "gaps must lie in (0, T]");
        if (gaps.size() < 2) cfg.error("modulus", "gaps", "need at least two gaps");
        cfg.finish();
        return [=]() {
            SdeProblem p;
            GlobalParams gp;
            gp.d = d;
            p.drift = make_field({"zero", {{"d", static_cast<double>(d)}}}, gp);
            p.sigma = Diffusion::scaled_identity(d, 1.0);
            p.x0.assign(static_cast<std::size_t>(d), 0.0);
            p.params = gp;
            const LazySource src(p, SimOptions{n, dt, T, seed, workers, std::nullopt});
            const std::size_t du = static_cast<std::size_t>(d);
            std::vector<std::size_t> ks;
            for (double g : gaps) ks.push_back(static_cast<std::size_t>(std::llround(g / dt)));
            std::vector<PathDiag> diags;
            const std::size_t k = gaps.size() + 1;
            const auto vals = per_path(
                src, k, workers,
                [&](std::size_t, std::span<const double> s, const PathDiag&, std::span<double> o) {
                    double best = 0.0;
                    std::size_t gi = 0;
                    const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
                    std::vector<std::pair<std::size_t, std::size_t>> order_idx;
                    for (std::size_t i = 0; i < ks.size(); ++i) order_idx.push_back({ks[i], i});
                    std::sort(order_idx.begin(), order_idx.end());
                    for (std::size_t j = 1; j <= kmax; ++j) {
                        best = std::max(best, norm2(s.subspan(j * du, du)));
                        while (gi < order_idx.size() && order_idx[gi].first == j) o[order_idx[gi++].second] = std::pow(best, order);
                    }
                    const auto last = s.subspan(s.size() - du, du);
                    o[k - 1] = std::pow(norm2(last), 2);
                },
                &diags);
            EstimateReport rep;
            rep.name = "modulus_moment";
            rep.citation = "modulus of continuity moment: E sup_{u in [s,r]} |x_u - x_s|^n <= N (|r - s|^{n/2} + |r - s|^n)";
            rep.swept = "gap r - s";
            std::vector<double> lx, ly, lse;
            for (std::size_t i = 0; i < gaps.size(); ++i) {
                SweepRow row;
                std::ostringstream lab;
                lab << "gap=" << gaps[i];
                row.label = lab.str();
                row.param = gaps[i];
                row.lhs = summarize(vals, diags, k, i);
                lx.push_back(std::log(gaps[i]));
                ly.push_back(std::log(row.lhs->mean));
                lse.push_back(row.lhs->se / row.lhs->mean);
                rep.sweep.push_back(std::move(row));
            }
            rep.fit = fit_line(lx, ly, lse);
            const Estimate e2 = summarize(vals, diags, k, k - 1);
            const double z = (e2.mean - d * T) / e2.se;
            rep.checks.push_back({"log-log slope equals n/2", std::abs(rep.fit->slope - order / 2) <= tol,
                                  "slope " + std::to_string(rep.fit->slope) + ", target " + std::to_string(order / 2)});
            rep.checks.push_back({"E|x_T|^2 = d T within 3 standard errors", std::abs(z) <= 3.0,
                                  "mean " + std::to_string(e2.mean) + ", z " + std::to_string(z)});
            rep.verdict = rep.all_checks_pass() ? Verdict::ExponentMatch : Verdict::Inconclusive;
            rep.summary = {{"second_moment_T", e2.mean}, {"second_moment_se", e2.se}, {"paths", n}, {"dt", dt}, {"d", d}};
            return std::vector<EstimateReport>{rep};
        };
    }
    cfg.error("experiment", "check", "expected one of exit-bound, krylov, barrier, collapse, scaling, modulus");
    cfg.finish();
    return {};
}

Runner scan_experiment(Context& ctx) {
    Config& cfg = ctx.cfg;
    CollapseConfig c;
    c.d = static_cast<int>(cfg.integer("scan", "d", 3));
    const double alpha = cfg.num("scan", "alpha", 0.5);
    const auto eps = cfg.list("scan", "eps", {0.1, 0.05});
    const auto widths = cfg.list("scan", "widths", {1e-1, 3e-2, 1e-2});
    c.dt = ctx.positive("scan", "dt", 1e-3);
    c.T = ctx.positive("scan", "T", 1.0);
    c.n_paths = ctx.paths("scan", 2000);
    c.kernel = read_kernel(cfg, "scan");
    c.collar_factor = ctx.positive("scan", "collar_factor", c.collar_factor);
    c.near_radius = ctx.positive("scan", "near_radius", c.near_radius);
    c.seed = ctx.seed;
    c.workers = ctx.opt.workers;
    cfg.finish();
    return [=]() { return std::vector<EstimateReport>{nonexistence_scan(alpha, eps, widths, c)}; };
}

}  // namespace

std::vector<std::pair<std::string, std::string>> plots_for(const EstimateReport& r) {
    std::vector<std::pair<std::string, std::string>> out;
    auto column = [&](auto get) {
        Series s;
        for (const auto& row : r.sweep) {
            const auto v = get(row);
            if (!v) continue;
            s.x.push_back(row.param);
            s.y.push_back(*v);
        }
        return s;
    };
    if ((r.name == "exit_bound_check" || r.name == "modulus_moment") && r.fit) {
        const bool exit = r.name == "exit_bound_check";
        Series pts;
        pts.name = exit ? "E int f / avg norm" : "E sup |x_u - x_s|^n";
        for (const auto& row : r.sweep) {
            if (!row.lhs) continue;
            const double norm = exit ? row.rhs.value_or(1.0) : 1.0;
            if (!(norm > 0.0)) continue;
            pts.x.push_back(row.param);
            pts.y.push_back(row.lhs->mean / norm);
            pts.y_err.push_back(1.96 * row.lhs->se / norm);
        }
        Series fit;
        fit.name = "fit, slope " + std::to_string(r.fit->slope).substr(0, 6);
        fit.line = true;
        for (double x : pts.x) {
            fit.x.push_back(x);
            fit.y.push_back(std::exp(r.fit->intercept + r.fit->slope * std::log(x)));
        }
        out.push_back({"fit", render_svg({pts, fit}, {r.name, exit ? "R" : "gap", exit ? "lhs / avg norm" : "moment", true, true})});
        return out;
    }
    if (r.name == "collapse_experiment" || r.name == "nonexistence_scan") {
        std::map<double, Series> slope, collar;
        for (const auto& row : r.sweep) {
            double eps = 0, w = 0, occ = 0;
            for (const auto& [k, v] : row.extra) {
                if (k == "eps") eps = v.value_or(0);
                if (k == "width") w = v.value_or(0);
                if (k == "collar_occupation") occ = v.value_or(0);
            }
            auto& s = slope[eps];
            s.name = "eps=" + std::to_string(eps).substr(0, 5);
            s.x.push_back(w);
            s.y.push_back(row.lhs ? row.lhs->mean : 0.0);
            s.y_err.push_back(row.lhs ? 1.96 * row.lhs->se : 0.0);
            auto& c = collar[eps];
            c.name = s.name;
            c.x.push_back(w);
            c.y.push_back(occ);
        }
        std::vector<Series> a, b;
        for (auto& [e, s] : slope) a.push_back(s);
        for (auto& [e, s] : collar) b.push_back(s);
        out.push_back({"slope", render_svg(a, {"slope of E|x_t|^2", "mollification width", "slope", true, false})});
        out.push_back({"collar", render_svg(b, {"origin collar occupation", "mollification width", "fraction of time", true, false})});
        return out;
    }
    if (r.name == "scaling_invariance_check") {
        Series a = column([](const SweepRow& row) { return row.lhs ? std::optional<double>(row.lhs->mean) : std::nullopt; });
        a.name = "E|x_t|^2";
        Series b = column([](const SweepRow& row) { return row.rhs; });
        b.name = "rho^2 E|y_{t/rho^2}|^2";
        b.line = true;
        out.push_back({"moments", render_svg({a, b}, {r.name, "t", "second moment", false, false})});
        return out;
    }
    Series s = column([](const SweepRow& row) { return row.ratio ? row.ratio : row.rhs; });
    s.name = r.name;
    const bool logx = std::all_of(s.x.begin(), s.x.end(), [](double v) { return v > 0.0; });
    out.push_back({"sweep", render_svg({s}, {r.name, r.swept, "ratio", logx, false})});
    return out;
}

RunResult run_experiment(const std::string& kind, Config cfg, const RunOptions& opt) {
    const auto started = std::chrono::steady_clock::now();
    const std::string started_at = iso_now();
    if (opt.out_dir.empty()) fail(ErrorKind::ConfigInvalid, "an output directory is required (--out)");
    if (opt.workers < 1) fail(ErrorKind::ConfigInvalid, "--workers must be at least 1");

    const auto declared = cfg.opt_str("experiment", "kind");
    if (declared && *declared != kind)
        cfg.error("experiment", "kind", "config declares '" + *declared + "' but the subcommand is '" + kind + "'");
    Context ctx{cfg, opt, read_budget(cfg), 1, false, {}};
    const long long seed = cfg.integer("experiment", "seed", 1);
    ctx.seed = opt.seed ? *opt.seed : static_cast<std::uint64_t>(seed);
    cfg.set("experiment", "seed", std::to_string(ctx.seed));
    cfg.set("experiment", "kind", kind);
    cfg.str("experiment", "seed", "");
    cfg.str("experiment", "kind", "");
    cfg.str("experiment", "description", "");

    Runner run;
    if (kind == "norm")
        run = norm_experiment(ctx);
    else if (kind == "mollify")
        run = mollify_experiment(ctx);
    else if (kind == "simulate")
        run = simulate_experiment(ctx);
    else if (kind == "verify")
        run = verify_experiment(ctx);
    else if (kind == "scan")
        run = scan_experiment(ctx);
    else
        fail(ErrorKind::ConfigInvalid, "unknown experiment kind '" + kind + "'");

    fs::create_directories(opt.out_dir);
    const fs::path dir(opt.out_dir);
    RunResult res;
    write_text(dir / "config.ini", cfg.to_ini());
    res.outputs.push_back("config.ini");

    res.reports = run();
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const bool over_time = elapsed > ctx.budget.wall_clock_seconds;
    if (over_time) ctx.notes.push_back("wall-clock budget exceeded");
    for (std::size_t i = 0; i < res.reports.size(); ++i) {
        auto& r = res.reports[i];
        for (const auto& n : ctx.notes) r.notes.push_back(n);
        if (ctx.budget_clamped || over_time) r.summary["budget_exceeded"] = true;
        const std::string stem = res.reports.size() == 1 ? "report" : "report_" + r.name;
        write_text(dir / (stem + ".json"), to_json(r).dump(2) + "\n");
        write_text(dir / (stem + ".csv"), to_csv(r));
        write_text(dir / (stem + ".txt"), to_table(r));
        res.outputs.insert(res.outputs.end(), {stem + ".json", stem + ".csv", stem + ".txt"});
        if (opt.plots)
            for (const auto& [suffix, svg] : plots_for(r)) {
                write_text(dir / (stem + "_" + suffix + ".svg"), svg);
                res.outputs.push_back(stem + "_" + suffix + ".svg");
            }
        if (r.verdict == Verdict::Violated) res.exit_code = kExitViolated;
    }
    for (const auto& f : fs::directory_iterator(dir)) {
        const auto name = f.path().filename().string();
        if (std::find(res.outputs.begin(), res.outputs.end(), name) == res.outputs.end() && name != "manifest.json")
            res.outputs.push_back(name);
    }
    std::sort(res.outputs.begin(), res.outputs.end());

    nlohmann::json m;
    m["tool"] = "driftlab";
    m["version"] = kVersion;
    m["experiment"] = kind;
    m["config"] = cfg.to_json();
    m["seed"] = ctx.seed;
    m["workers"] = opt.workers;
    m["started"] = started_at;
    m["finished"] = iso_now();
    m["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    m["budget"] = {{"max_paths", ctx.budget.max_paths},
                   {"max_quad_level", ctx.budget.max_quad_level},
                   {"wall_clock_seconds", ctx.budget.wall_clock_seconds}};
    m["budget_exceeded"] = ctx.budget_clamped || over_time;
    m["outputs"] = res.outputs;
    nlohmann::json verdicts = nlohmann::json::object();
    for (const auto& r : res.reports) verdicts[r.name] = to_string(r.verdict);
    m["verdicts"] = verdicts;
    m["exit_code"] = res.exit_code;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
    return res;
}

bool replay(const std::string& dir, const RunOptions& opt, std::vector<std::string>* differences) {
    const fs::path src(dir);
    if (!fs::exists(src / "config.ini")) fail(ErrorKind::Io, "no config.ini in " + dir);
    Config cfg = Config::from_file((src / "config.ini").string());
    const std::string kind = cfg.sections().at("experiment").at("kind");
    RunOptions o = opt;
    o.seed.reset();
    run_experiment(kind, cfg, o);
    bool same = true;
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    for (const auto& f : fs::directory_iterator(src)) {
        const auto name = f.path().filename().string();
        if (f.path().extension() != ".json" || name == "manifest.json" || name == "paths.json") continue;
        const fs::path other = fs::path(opt.out_dir) / name;
        if (!fs::exists(other) || slurp(f.path()) != slurp(other)) {
            same = false;
            if (differences) differences->push_back(name);
        }
    }
    return same;
}

int cli_main(int argc, char** argv) {
    CLI::App app{"driftlab: mixed-norm and Morrey-norm computations, mollification and SDE simulation for singular drifts"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool plots = false;
    auto add_common = [&](CLI::App* sc, bool needs_config) {
        auto* c = sc->add_option("--config", config_path, "experiment config (INI or .json)");
        if (needs_config) c->required();
        sc->add_option("--out", out_dir, "output directory")->required();
        sc->add_option("--seed", seed, "master seed (overrides the config)");
        sc->add_option("--workers", workers, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
        sc->add_flag("--plots", plots, "write SVG plots");
    };
    auto* list = app.add_subcommand("list-fields", "print the field registry");
    std::string list_out;
    list->add_option("--out", list_out, "also write fields.json into this directory");
    std::vector<CLI::App*> kinds;
    for (const char* k : {"norm", "mollify", "simulate", "verify", "scan"}) {
        auto* sc = app.add_subcommand(k, std::string("run a ") + k + " experiment");
        add_common(sc, true);
        kinds.push_back(sc);
    }
    auto* rep = app.add_subcommand("replay", "rerun an output directory's config and compare report JSON byte for byte");
    std::string replay_dir;
    rep->add_option("dir", replay_dir, "directory written by an earlier run")->required();
    rep->add_option("--out", out_dir, "fresh output directory")->required();
    rep->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    rep->add_flag("--plots", plots, "write SVG plots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (list->parsed()) {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& e : zoo_registry()) {
                std::cout << e.name << "  [" << to_string(e.kind) << "]\n  " << e.formula << "\n  " << e.citation << '\n';
                nlohmann::json params = nlohmann::json::array();
                for (const auto& p : e.params) {
                    std::cout << "    " << p.name << " = " << p.default_value << "  (" << p.doc << ")\n";
                    params.push_back({{"name", p.name}, {"default", std::isfinite(p.default_value) ? nlohmann::json(p.default_value) : nlohmann::json("inf")}, {"doc", p.doc}});
                }
                std::cout << "    d = 0  (dimension; 0 uses the global d)\n";
                j.push_back({{"name", e.name}, {"kind", to_string(e.kind)}, {"formula", e.formula}, {"citation", e.citation}, {"params", params}});
            }
            if (!list_out.empty()) {
                fs::create_directories(list_out);
                write_text(fs::path(list_out) / "fields.json", j.dump(2) + "\n");
            }
            return kExitOk;
        }
        RunOptions opt{out_dir, seed, workers, plots};
        if (rep->parsed()) {
            std::vector<std::string> diff;
            const bool same = replay(replay_dir, opt, &diff);
            if (same) {
                std::cout << "replay identical\n";
                return kExitOk;
            }
            std::cout << "replay differs:";
            for (const auto& d : diff) std::cout << ' ' << d;
            std::cout << '\n';
            return kExitRuntime;
        }
        for (auto* sc : kinds)
            if (sc->parsed()) {
                const RunResult r = run_experiment(sc->get_name(), Config::from_file(config_path), opt);
                for (const auto& rp : r.reports) std::cout << to_table(rp) << '\n';
                std::cout << "wrote " << r.outputs.size() << " files to " << out_dir << '\n';
                return r.exit_code;
            }
    } catch (const LabError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace driftlab
