// Runs the acceptance criteria through the experiment runner and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "driftlab/cli.hpp"

using namespace driftlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

fs::path g_root = "acceptance_out";
int g_workers = 1;
std::vector<fs::path> g_dirs;

RunResult run(const std::string& name, const std::string& kind, const std::string& ini) {
    const fs::path dir = g_root / name;
    fs::remove_all(dir);
    RunOptions o{dir.string(), std::nullopt, g_workers, true};
    RunResult r = run_experiment(kind, Config::from_ini(ini), o);
    g_dirs.push_back(dir);
    return r;
}

const Check* find_check(const EstimateReport& r, const std::string& prefix) {
    for (const auto& c : r.checks)
        if (c.name.rfind(prefix, 0) == 0) return &c;
    return nullptr;
}

std::string fmt(double v, int prec = 6) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

Outcome c1_norm_oracle() {
    const auto r = run("c1_norm", "norm",
                       "[params]\nd = 3\n[field]\nname = inverse_power\na = 1\n"
                       "[norm]\nmode = cylinder\np = 2\nq = 2\nradii = 1, 0.5, 0.25, 0.125\nmax_level = 6\n");
    Outcome o{true, ""};
    for (const auto& row : r.reports.at(0).sweep) {
        const double oracle = std::sqrt(3.0) / row.param;
        const double rel = std::abs(*row.rhs - oracle) / oracle;
        o.pass = o.pass && rel <= 0.01;
        o.detail += "r=" + fmt(row.param) + " rel.err " + fmt(rel, 2) + "; ";
    }
    return o;
}

Outcome c2_scale_invariant_norm() {
    // d/p0 + 1/q0 = 1 with d = 2, q0 = 4 in (d + 1, 2(d + 1)): p0 = 8/3.
    const auto r = run("c2_remark_norm", "norm",
                       "[params]\nd = 2\n[field]\nname = remark_1_28_1\n"
                       "[norm]\nmode = cylinder\np = 8/3\nq = 4\nordering = time_inner\n"
                       "radii = 1, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625\nmax_level = 6\n");
    double lo = INFINITY, hi = 0.0;
    bool finite = true;
    for (const auto& row : r.reports.at(0).sweep) {
        const double v = row.param * row.rhs.value_or(NAN);
        finite = finite && std::isfinite(v) && row.flags.empty();
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {finite && hi / lo <= 1.5, "r * avg norm in [" + fmt(lo) + ", " + fmt(hi) + "], max/min " + fmt(hi / lo)};
}

Outcome c3_scaling_identity() {
    Outcome o{true, ""};
    for (double rho : {0.5, 0.25}) {
        const auto r = run("c3_scaling_rho" + fmt(rho), "verify",
                           "[experiment]\ncheck = scaling\n[params]\nd = 2\n[field]\nname = remark_1_28_1_drift\n"
                           "[scaling]\nrho = " + fmt(rho) + "\np = 8/3\nq = 4\nordering = time_inner\n"
                           "x0 = 0.3, 0\npaths = 20000\ndt = 1e-3\nT = 1\n");
        const Check* c = find_check(r.reports.at(0), "b_1(b~) equals b_rho(b)");
        const Check* mc = find_check(r.reports.at(0), "first and second moments");
        o.pass = o.pass && c && c->passed;
        o.detail += "rho=" + fmt(rho) + ": " + (c ? c->detail : "missing") + " [path law: " + (mc ? mc->detail : "-") + "]; ";
    }
    return o;
}

Outcome c4_brownian() {
    const auto r = run("c4_brownian", "verify",
                       "[experiment]\ncheck = modulus\n[modulus]\nd = 2\npaths = 100000\ndt = 1e-3\nT = 1\n"
                       "gaps = 0.125, 0.25, 0.5, 1\norder = 2\nslope_tol = 0.05\n");
    const auto& rep = r.reports.at(0);
    const double m = rep.summary["second_moment_T"], se = rep.summary["second_moment_se"];
    const bool moment = std::abs(m - 2.0) <= 3.0 * se;
    const bool slope = rep.fit && std::abs(rep.fit->slope - 1.0) <= 0.05;
    return {moment && slope, "E|x_1|^2 = " + fmt(m) + " +- " + fmt(se, 3) + ", modulus slope " + fmt(rep.fit ? rep.fit->slope : NAN)};
}

Outcome c5_exit_time() {
    const auto r = run("c5_exit", "verify",
                       "[experiment]\ncheck = exit-bound\n[exit]\nd = 3\ntest = one\nradii = 0.25, 0.5, 1\n"
                       "paths = 50000\ndt = 1e-3\np = 4\nq = 4\n");
    const auto& rep = r.reports.at(0);
    const double s = rep.fit ? rep.fit->slope : NAN;
    return {std::abs(s - 2.0) <= 0.05, "slope of log E tau_R against log R " + fmt(s) + " +- " + fmt(rep.fit ? rep.fit->slope_se : NAN, 3)};
}

Outcome c6_collapse() {
    const auto a = run("c6_eps_quarter", "verify",
                       "[experiment]\ncheck = collapse\n[collapse]\nd = 3\neps = 0.25\nwidths = 1e-3\ndt = 1e-3\npaths = 20000\n");
    const auto& ra = a.reports.at(0);
    const double slope = ra.sweep.at(0).lhs->mean;
    const bool pa = std::abs(slope - 4.5) <= 0.05 * 4.5;
    const auto b = run("c6_eps_one", "verify",
                       "[experiment]\ncheck = collapse\n[collapse]\nd = 3\neps = 1\nwidths = 1e-2, 1e-3, 1e-4\ndt = 1e-4\npaths = 16000\n");
    const auto& rb = b.reports.at(0);
    const Check* dec = find_check(rb, "eps=1: slope decreases");
    const Check* inc = find_check(rb, "eps=1: collar occupation increases");
    std::string ladder;
    for (const auto& row : rb.sweep) {
        double collar = NAN, width = NAN;
        for (const auto& [k, v] : row.extra) {
            if (k == "collar_occupation") collar = v.value_or(NAN);
            if (k == "width") width = v.value_or(NAN);
        }
        ladder += " w=" + fmt(width) + " slope " + fmt(row.lhs->mean, 4) + " collar " + fmt(collar, 3) + ";";
    }
    const bool pb = dec && dec->passed && inc && inc->passed;
    return {pa && pb, "eps=0.25 slope " + fmt(slope) + " (target 4.5) " + (pa ? "ok" : "off") + "; eps=1 ladder:" + ladder +
                          " decreasing slope " + (dec && dec->passed ? "yes" : "no") + ", increasing collar " +
                          (inc && inc->passed ? "yes" : "no")};
}

Outcome c7_mollifier_convergence() {
    const auto r = run("c7_convergence", "mollify",
                       "[params]\nd = 2\n[field]\nname = remark_1_28_1\n"
                       "[mollify]\nepsilons = 0.1, 0.05, 0.025, 0.0125\ntable_level = 1\n"
                       "[grid]\ncounts = 2, 3, 3\norigin = 0.5, 0.25, -0.25\nspacing = 0.0625, 0.25, 0.25\n"
                       "[convergence]\nenabled = true\nbeta = 1\nbeta_prime = 1.2\nt0 = 0.5\nx0 = 0.5, 0\nr = 0.25\n"
                       "p = 8/3\nq = 4\nordering = time_inner\n");
    const auto& rep = r.reports.at(1);
    std::string vals;
    for (const auto& row : rep.sweep) vals += " " + fmt(*row.rhs, 4);
    const double ratio = rep.summary["last_over_first"];
    // Informational: a cylinder through the singular point, where the decay is
    // only like eps^(beta' - beta). Not part of the verdict.
    const auto o = run("c7_convergence_origin", "mollify",
                       "[params]\nd = 2\n[field]\nname = remark_1_28_1\n"
                       "[mollify]\nepsilons = 0.1, 0.05, 0.025, 0.0125\ntable_level = 1\n"
                       "[grid]\ncounts = 2, 2, 2\norigin = 0, -0.25, -0.25\nspacing = 0.25, 0.5, 0.5\n"
                       "[convergence]\nenabled = true\nbeta = 1\nbeta_prime = 1.2\nt0 = 0\nx0 = 0, 0\nr = 0.5\n"
                       "p = 8/3\nq = 4\nordering = time_inner\n");
    const auto& ro = o.reports.at(1);
    std::string ovals;
    for (const auto& row : ro.sweep) ovals += " " + fmt(*row.rhs, 4);
    return {rep.all_checks_pass(), "C_1/4(1/2, (1/2, 0)): Morrey norms" + vals + ", last/first " + fmt(ratio, 4) +
                                       " [informational, C_1/2(0, 0):" + ovals + ", last/first " +
                                       fmt(static_cast<double>(ro.summary["last_over_first"]), 4) + "]"};
}

Outcome c8_krylov() {
    const auto r = run("c8_krylov", "verify",
                       "[experiment]\ncheck = krylov\nseed = 3\n[params]\nd = 3\n[field]\nname = opening_example\n"
                       "[krylov]\nmollify_width = 1e-3\nT = 1\npaths = 20000\ndt = 1e-3\n"
                       "radii = 1, 0.5, 0.25, 0.125\nlocations = 0:0, 0.25:0.5\n"
                       "extra_radii = 0.7071067811865476, 0.3535533905932738, 0.1767766952966369, 0.08838834764831845\n"
                       "p = 4\nq = 4\nbeta = 1.5\n");
    const auto& rep = r.reports.at(0);
    const Check* a = find_check(rep, "sup stable");
    const Check* b = find_check(rep, "no ratio above");
    return {rep.all_checks_pass(), std::string(a ? a->detail : "") + "; " + (b ? b->detail : "")};
}

Outcome c9_barrier() {
    const auto r = run("c9_barrier", "verify",
                       "[experiment]\ncheck = barrier\n[barrier]\nd = 3\nradii = 0.25, 0.5, 1\n"
                       "members = 1:1, 1:2, 2:1, 2:2, 3:3\nextra_members = 1:3, 3:1, 2:3, 3:2, 4:4\np = 4\nq = 4\n");
    const auto& rep = r.reports.at(0);
    const Check* c = find_check(rep, "cap stable");
    return {rep.all_checks_pass(), c ? c->detail : "missing"};
}

Outcome c10_determinism() {
    const int other = g_workers == 1 ? 2 : 1;
    std::vector<std::string> bad;
    for (const auto& dir : g_dirs) {
        std::vector<std::string> diff;
        RunOptions o{(dir.string() + "_replay"), std::nullopt, other, false};
        fs::remove_all(o.out_dir);
        if (!replay(dir.string(), o, &diff))
            for (const auto& d : diff) bad.push_back(dir.filename().string() + "/" + d);
    }
    std::string detail = std::to_string(g_dirs.size()) + " runs replayed with " + std::to_string(other) + " worker(s) against " +
                         std::to_string(g_workers);
    for (const auto& b : bad) detail += "; differs: " + b;
    return {bad.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_root = argv[1];
    if (const char* w = std::getenv("DRIFTLAB_ACCEPTANCE_WORKERS")) g_workers = std::max(1, std::atoi(w));
    else g_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    fs::create_directories(g_root);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 norm oracle sqrt(3)/r", c1_norm_oracle},
        {"2 scale-invariant averaged norm", c2_scale_invariant_norm},
        {"3 drift functional scaling identity", c3_scaling_identity},
        {"4 Brownian baselines", c4_brownian},
        {"5 exit-time R^2 law", c5_exit_time},
        {"6 inverse-square drift slopes", c6_collapse},
        {"7 mollifier Morrey convergence", c7_mollifier_convergence},
        {"8 occupation ratio stabilization", c8_krylov},
        {"9 barrier bound cap", c9_barrier},
        {"10 determinism across worker counts", c10_determinism},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << "criterion " << name << ": " << (o.pass ? "PASS" : "FAIL") << "  (" << fmt(sec, 3) << " s) " << o.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
