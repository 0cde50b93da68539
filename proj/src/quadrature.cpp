#include "driftlab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "driftlab/errors.hpp"

namespace driftlab {

void Rule1D::append(const Rule1D& other) {
    x.insert(x.end(), other.x.begin(), other.x.end());
    w.insert(w.end(), other.w.begin(), other.w.end());
}

namespace {

Rule1D compute_gauss_legendre(int n) {
    Rule1D r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = z;
                p0 = 1.0;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n == 1 ? 1.0 : n * (z * p1 - p0) / (z * z - 1.0);
        const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = wt;
        r.w[n - 1 - i] = wt;
    }
    if (n % 2 == 1) r.x[n / 2] = 0.0;
    return r;
}

void add_panel(Rule1D& out, double a, double b, int n) {
    const Rule1D& g = gauss_legendre(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int i = 0; i < n; ++i) {
        out.x.push_back(mid + half * g.x[i]);
        out.w.push_back(half * g.w[i]);
    }
}

// Panel [0, h] measured from the singular endpoint `a` in direction `dir`,
// integrated through s = h u^6.
void add_endpoint_panel(Rule1D& out, double a, double dir, double h, int n) {
    const Rule1D& g = gauss_legendre(n);
    for (int i = 0; i < n; ++i) {
        const double u = 0.5 * (g.x[i] + 1.0);
        const double u5 = u * u * u * u * u;
        out.x.push_back(a + dir * h * u5 * u);
        out.w.push_back(0.5 * g.w[i] * 6.0 * h * u5);
    }
}

void add_graded_from(Rule1D& out, double a, double b, QuadLevel lvl) {
    // Geometric panels shrinking toward a.
    constexpr double ratio = 0.2;
    const double len = b - a;
    const double dir = len >= 0.0 ? 1.0 : -1.0;
    const double L = std::abs(len);
    const int n = lvl.points_per_panel();
    double outer = L;
    for (int k = 0; k < lvl.grading_depth(); ++k) {
        const double inner = outer * ratio;
        const double lo = a + dir * inner;
        const double hi = a + dir * outer;
        add_panel(out, std::min(lo, hi), std::max(lo, hi), n);
        outer = inner;
    }
    add_endpoint_panel(out, a, dir, outer, n);
}

}  // namespace

const Rule1D& gauss_legendre(int n) {
    if (n < 1 || n > 512) fail(ErrorKind::InvalidParams, "Gauss-Legendre order out of range");
    static std::mutex mu;
    static std::map<int, Rule1D> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

Rule1D composite_gauss(double a, double b, int panels, int n) {
    Rule1D r;
    r.x.reserve(static_cast<std::size_t>(panels * n));
    r.w.reserve(static_cast<std::size_t>(panels * n));
    const double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) add_panel(r, a + k * h, a + (k + 1) * h, n);
    return r;
}

Rule1D graded_rule(double a, double b, bool grade_a, bool grade_b, QuadLevel lvl) {
    Rule1D r;
    if (!(b > a)) return r;
    if (!grade_a && !grade_b) return composite_gauss(a, b, lvl.smooth_panels(), lvl.points_per_panel());
    if (grade_a && grade_b) {
        const double mid = 0.5 * (a + b);
        add_graded_from(r, a, mid, lvl);
        add_graded_from(r, b, mid, lvl);
        return r;
    }
    if (grade_a) {
        add_graded_from(r, a, b, lvl);
    } else {
        add_graded_from(r, b, a, lvl);
    }
    return r;
}

SphereRule sphere_rule(int d, QuadLevel lvl) {
    SphereRule s;
    s.d = d;
    if (d == 1) {
        s.dirs = {1.0, -1.0};
        s.w = {1.0, 1.0};
        return s;
    }
    const int n_phi = 8 << lvl.level;
    const int n_theta = 4 << lvl.level;
    const double dphi = 2.0 * std::numbers::pi / n_phi;
    const int n_polar = d - 2;
    const Rule1D theta = composite_gauss(0.0, std::numbers::pi, 1, n_theta);

    std::vector<int> idx(static_cast<std::size_t>(n_polar), 0);
    std::vector<double> dir(static_cast<std::size_t>(d));
    while (true) {
        double weight = 1.0;
        double sin_prod = 1.0;
        for (int j = 0; j < n_polar; ++j) {
            const double th = theta.x[idx[j]];
            dir[j] = sin_prod * std::cos(th);
            weight *= theta.w[idx[j]] * std::pow(std::sin(th), d - 2 - j);
            sin_prod *= std::sin(th);
        }
        for (int k = 0; k < n_phi; ++k) {
            const double phi = (k + 0.5) * dphi;
            dir[d - 2] = sin_prod * std::cos(phi);
            dir[d - 1] = sin_prod * std::sin(phi);
            s.dirs.insert(s.dirs.end(), dir.begin(), dir.end());
            s.w.push_back(weight * dphi);
        }
        int j = n_polar - 1;
        while (j >= 0 && ++idx[j] == n_theta) {
            idx[j] = 0;
            --j;
        }
        if (j < 0) break;
    }
    return s;
}

}  // namespace driftlab
