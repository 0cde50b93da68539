#include "driftlab/sup_search.hpp"

#include <algorithm>
#include <cmath>

#include "driftlab/errors.hpp"
#include "driftlab/parallel.hpp"

namespace driftlab {

namespace {

struct Candidate {
    double r = 0.0;
    double t0 = 0.0;
    Point x;
    double value = -1.0;
};

// a ranks before b: larger value, then smaller radius, then lexicographic (t0, x).
bool ranks_before(const Candidate& a, const Candidate& b, double tie_rel) {
    const double scale = std::max(std::abs(a.value), std::abs(b.value));
    if (std::abs(a.value - b.value) > tie_rel * scale) return a.value > b.value;
    if (a.r != b.r) return a.r < b.r;
    if (a.t0 != b.t0) return a.t0 < b.t0;
    return a.x < b.x;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    if (n <= 1 || !(b > a)) {
        v.push_back(0.5 * (a + b));
        return v;
    }
    for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
    return v;
}

void push_unique(std::vector<double>& v, double x) {
    for (double y : v)
        if (std::abs(x - y) <= 1e-14 * (1.0 + std::abs(x))) return;
    v.push_back(x);
}

void push_unique(std::vector<Point>& v, const Point& x) {
    for (const Point& y : v)
        if (distance(x, y) <= 1e-14 * (1.0 + norm2(x))) return;
    v.push_back(x);
}

std::vector<double> candidate_times(const SearchDomain& dom, bool time_independent, int n_lattice, double r) {
    std::vector<double> out;
    const SupportHint& s = dom.support;
    if (time_independent && !s.bounded_time()) {
        out.push_back(0.0);
        return out;
    }
    for (double st : dom.singular.times) {
        push_unique(out, st);
        push_unique(out, st - 0.5 * r * r);
    }
    if (s.bounded_time()) {
        push_unique(out, s.t_lo);
        for (double t : linspace(s.t_lo - r * r, s.t_hi, n_lattice)) push_unique(out, t);
    } else if (s.t_lo > -kInf) {
        push_unique(out, s.t_lo);
    } else if (s.t_hi < kInf) {
        push_unique(out, s.t_hi - r * r);
    }
    if (out.empty()) out.push_back(0.0);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Point> candidate_centers(const SearchDomain& dom, int per_dim, double r) {
    const int d = dom.d;
    std::vector<Point> out;
    for (const Point& a : dom.singular.axes) {
        push_unique(out, a);
        for (int i = 0; i < d; ++i) {
            for (double sgn : {1.0, -1.0}) {
                Point p = a;
                p[i] += sgn * 0.5 * r;
                push_unique(out, p);
            }
        }
    }
    const SupportHint& s = dom.support;
    if (s.bounded_space()) {
        // Keep the lattice at no more than ~256 points regardless of d.
        int n = std::max(per_dim, 1);
        while (n > 1 && std::pow(static_cast<double>(n), d) > 256.0) --n;
        const std::vector<double> axis = linspace(-s.radius, s.radius, n);
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        while (true) {
            Point p(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i) p[i] = s.center[i] + axis[idx[i]];
            if (distance(p, s.center) <= s.radius + r) push_unique(out, p);
            int j = d - 1;
            while (j >= 0 && ++idx[j] == n) {
                idx[j] = 0;
                --j;
            }
            if (j < 0) break;
        }
        push_unique(out, s.center);
    }
    if (out.empty()) out.push_back(Point(static_cast<std::size_t>(d), 0.0));
    return out;
}

struct Evaluator {
    const CylinderObjective& objective;
    double r_min;
    double r_max;

    double operator()(Candidate& c, const QuadratureOptions& q) const {
        c.r = std::clamp(c.r, r_min, r_max);
        c.value = objective(ParabolicCylinder(c.t0, c.x, c.r), q);
        return c.value;
    }
};

struct DescentOutcome {
    Candidate best;
    std::size_t evaluations = 0;
    bool capped = false;
};

DescentOutcome descend(const Evaluator& eval, Candidate start, bool time_independent, const SearchOptions& opt) {
    DescentOutcome out;
    const int d = static_cast<int>(start.x.size());
    const int n_par = 2 + d;
    std::vector<double> step(static_cast<std::size_t>(n_par));
    step[0] = 0.5 * std::log(2.0);
    step[1] = 0.5 * start.r * start.r;
    for (int i = 0; i < d; ++i) step[2 + i] = 0.5 * start.r;

    auto shifted = [&](const Candidate& c, int k, double delta) {
        Candidate n = c;
        if (k == 0) {
            n.r = c.r * std::exp(delta);
        } else if (k == 1) {
            n.t0 += delta;
        } else {
            n.x[k - 2] += delta;
        }
        return n;
    };

    Candidate cur = start;
    int sweeps = 0;
    int halvings = 0;
    constexpr int kHalvings = 6;
    while (halvings < kHalvings) {
        if (sweeps >= opt.max_sweeps) {
            out.capped = true;
            break;
        }
        ++sweeps;
        bool improved = false;
        for (int k = 0; k < n_par; ++k) {
            if (k == 1 && time_independent) continue;
            for (double sgn : {1.0, -1.0}) {
                Candidate trial = shifted(cur, k, sgn * step[k]);
                eval(trial, opt.coarse);
                ++out.evaluations;
                if (trial.value > cur.value * (1.0 + 1e-9) + 1e-300) {
                    cur = trial;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) {
            for (double& s : step) s *= 0.5;
            ++halvings;
        }
    }
    out.best = cur;
    return out;
}

}  // namespace

SearchDomain SearchDomain::for_field(const Field& f, double rho_max) {
    SearchDomain dom;
    dom.d = f.dim();
    dom.rho_max = rho_max;
    dom.support = f.support();
    dom.singular = f.singular();
    dom.time_independent = f.time_independent();
    return dom;
}

SupResult cylinder_sup_search(const CylinderObjective& objective, const SearchDomain& domain, const SearchOptions& opt) {
    if (!(domain.rho_max > 0.0)) fail(ErrorKind::EmptyCylinder, "sup search needs rho_max > 0");
    if (opt.levels < 0 || opt.top_k < 1) fail(ErrorKind::InvalidParams, "sup search options out of range");

    const bool time_independent = domain.time_independent;

    const double r_min = domain.rho_max * std::ldexp(1.0, -opt.levels);
    const Evaluator eval{objective, r_min, domain.rho_max};
    const double tie = std::max(opt.fine.rel_tol, 1e-12);

    SupResult result;

    // Stage 1: lattice.
    std::vector<Candidate> lattice;
    std::vector<std::size_t> level_start;
    for (int k = 0; k <= opt.levels; ++k) {
        const double r = domain.rho_max * std::ldexp(1.0, -k);
        level_start.push_back(lattice.size());
        const auto times = candidate_times(domain, time_independent, opt.lattice_time, r);
        const auto centers = candidate_centers(domain, opt.lattice_per_dim, r);
        for (double t : times)
            for (const Point& x : centers) lattice.push_back(Candidate{r, t, x, -1.0});
    }
    level_start.push_back(lattice.size());
    parallel_for(lattice.size(), opt.workers, [&](std::size_t i) { eval(lattice[i], opt.coarse); });
    result.evaluations += lattice.size();

    for (int k = 0; k <= opt.levels; ++k) {
        double best = 0.0;
        for (std::size_t i = level_start[k]; i < level_start[k + 1]; ++i) best = std::max(best, lattice[i].value);
        result.per_level.push_back(best);
    }

    std::vector<std::size_t> order(lattice.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ranks_before(lattice[a], lattice[b], 1e-12); });
    const std::size_t n_start = std::min<std::size_t>(static_cast<std::size_t>(opt.top_k), order.size());

    // Stage 2: coordinate descent from the best lattice points.
    std::vector<DescentOutcome> descents(n_start);
    parallel_for(n_start, opt.workers, [&](std::size_t i) {
        descents[i] = descend(eval, lattice[order[i]], time_independent, opt);
    });

    // Stage 3: fine re-evaluation of starts and descent endpoints.
    std::vector<Candidate> finals;
    for (std::size_t i = 0; i < n_start; ++i) {
        finals.push_back(lattice[order[i]]);
        finals.push_back(descents[i].best);
        result.evaluations += descents[i].evaluations;
        if (descents[i].capped) result.budget_exceeded = true;
    }
    parallel_for(finals.size(), opt.workers, [&](std::size_t i) { eval(finals[i], opt.fine); });
    result.evaluations += finals.size();

    std::size_t best = 0;
    for (std::size_t i = 1; i < finals.size(); ++i)
        if (ranks_before(finals[i], finals[best], tie)) best = i;
    const Candidate& win = finals[best];
    result.value = std::max(win.value, 0.0);
    result.argmax.emplace(win.t0, win.x, win.r);

    const std::size_t L = result.per_level.size();
    if (L >= 2 && win.r <= r_min * (1.0 + 1e-12) &&
        result.per_level[L - 1] > result.per_level[L - 2] * (1.0 + tie))
        result.unresolved_small_scale = true;
    return result;
}

}  // namespace driftlab
