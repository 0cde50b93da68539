#include "doctest.h"

#include <cmath>
#include <random>

#include "driftlab/drift_zoo.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/estimates.hpp"
#include "driftlab/mixed_norm.hpp"

using namespace driftlab;

namespace {

const DiffusionMatrixFn identity = [](double, std::span<const double> x, std::span<double> o) {
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n * n; ++i) o[i] = 0.0;
    for (std::size_t i = 0; i < n; ++i) o[i * n + i] = 1.0;
};

}  // namespace

TEST_CASE("least squares recovers an exact line") {
    const LinearFit f = fit_line({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.slope_se == doctest::Approx(0.0));
}

TEST_CASE("ball intersection volume") {
    // d = 1: interval overlap.
    CHECK(ball_intersection_volume(1, 1.0, 0.5, 1.2) == doctest::Approx(0.3));
    // Nested and disjoint balls.
    CHECK(ball_intersection_volume(3, 1.0, 0.2, 0.3) == doctest::Approx(4.0 / 3.0 * std::numbers::pi * 0.008));
    CHECK(ball_intersection_volume(2, 1.0, 0.5, 1.6) == 0.0);
    // d = 2, equal radii: 2 r^2 acos(c/2r) - (c/2) sqrt(4r^2 - c^2).
    const double r = 1.0, c = 0.8;
    CHECK(ball_intersection_volume(2, r, r, c) ==
          doctest::Approx(2 * r * r * std::acos(c / (2 * r)) - 0.5 * c * std::sqrt(4 * r * r - c * c)).epsilon(1e-12));
    // d = 3 lens: pi (R + r - c)^2 (c^2 + 2cr - 3r^2 + 2cR + 6rR - 3R^2) / (12 c).
    const double R1 = 1.0, r2 = 0.7, dd = 1.1;
    const double lens = std::numbers::pi * std::pow(R1 + r2 - dd, 2) *
                        (dd * dd + 2 * dd * r2 - 3 * r2 * r2 + 2 * dd * R1 + 6 * r2 * R1 - 3 * R1 * R1) / (12 * dd);
    CHECK(ball_intersection_volume(3, R1, r2, dd) == doctest::Approx(lens).epsilon(1e-12));
    // d = 4 against Monte Carlo.
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    int hit = 0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
        double a = 0, b = 0;
        std::array<double, 4> x{};
        for (auto& v : x) v = U(gen);
        for (int k = 0; k < 4; ++k) {
            a += x[k] * x[k];
            b += (x[k] - (k == 0 ? 0.9 : 0.0)) * (x[k] - (k == 0 ? 0.9 : 0.0));
        }
        hit += a <= 1.0 && b <= 0.64;
    }
    const double mc = 16.0 * hit / n;
    CHECK(ball_intersection_volume(4, 1.0, 0.8, 0.9) == doctest::Approx(mc).epsilon(0.02));
}

TEST_CASE("indicator norms agree with the quadrature engine") {
    GlobalParams g;
    const ParabolicCylinder ind(0.1, {0.3, 0.0, 0.0}, 0.5);
    const Field f = make_field({"indicator_cylinder", {{"t0", 0.1}, {"rho", 0.5}, {"x0", 0.3}}}, g);
    const ParabolicCylinder c(0.0, {0.0, 0.0, 0.0}, 0.6);
    const NormSpec spec{4.0, 4.0, Ordering::SpaceInner, true};
    QuadratureOptions q;
    q.max_level = 6;
    CHECK(indicator_norm(ind, c, spec) == doctest::Approx(mixed_norm(f, c, spec, q).value).epsilon(0.01));
}

TEST_CASE("barrier ratio for p = q = 1 has a closed form") {
    // u = (1 - t)(1 - |x|^2): |L0 u| = (1 - |x|^2) + 2d(1 - t), averaging to 2/(d+2) + d on C_1.
    for (int d : {1, 2, 3}) {
        const auto rep = barrier_check({{1, 1, 1.0}}, {}, {1.0}, Point(static_cast<std::size_t>(d), 0.0), identity,
                                       {1.0, 1.0, Ordering::SpaceInner, true});
        REQUIRE(rep.sweep.size() == 1);
        REQUIRE(rep.sweep[0].ratio);
        CHECK(*rep.sweep[0].ratio == doctest::Approx(1.0 / (2.0 / (d + 2) + d)).epsilon(1e-6));
    }
}

TEST_CASE("barrier ratios are invariant under parabolic scaling and amplitude") {
    const auto rep = barrier_check({{2, 1, 1.0}, {2, 1, 7.5}}, {}, {0.25, 1.0}, {0.0, 0.0, 0.0}, identity,
                                   {4.0, 4.0, Ordering::SpaceInner, true});
    REQUIRE(rep.sweep.size() == 4);
    for (const auto& row : rep.sweep) CHECK(*row.ratio == doctest::Approx(*rep.sweep[0].ratio).epsilon(1e-6));
}

TEST_CASE("manufactured solutions vanish on the parabolic boundary") {
    const ParabolicCylinder c(0.0, {0.0, 0.0}, 0.5);
    CHECK_NOTHROW(check_boundary_vanishing(polynomial_barrier(2, 0.5, 2, 3, {0.0, 0.0}), c));
    Manufactured bad = polynomial_barrier(2, 0.5, 1, 1, {0.0, 0.0});
    bad.u = [](double, std::span<const double>) { return 1.0; };
    CHECK_THROWS_AS(check_boundary_vanishing(bad, c), LabError);
}

TEST_CASE("without drift the collapse slope is 2d") {
    for (int d : {1, 2, 3}) {
        CollapseConfig cfg;
        cfg.d = d;
        cfg.dt = 1e-3;
        cfg.n_paths = 2000;
        cfg.checkpoints = 9;
        const auto rep = collapse_experiment({0.0}, {1e-2}, cfg);
        REQUIRE(rep.sweep.size() == 1);
        const auto& e = *rep.sweep[0].lhs;
        CHECK(std::abs(e.mean - 2.0 * d) < 4.0 * e.se);
    }
}

TEST_CASE("report CSV has a fixed header and no NaN") {
    EstimateReport r;
    r.name = "t";
    SweepRow a;
    a.label = "a";
    a.param = 1.0;
    a.rhs = 2.0;
    a.extra = {{"x", std::nullopt}};
    SweepRow b;
    b.label = "b";
    b.param = 2.0;
    b.ratio = std::numeric_limits<double>::quiet_NaN();
    r.sweep = {a, b};
    const std::string csv = to_csv(r);
    CHECK(csv.rfind("label,param,lhs_mean", 0) == 0);
    CHECK(csv.find("nan") == std::string::npos);
    CHECK(csv.find("NaN") == std::string::npos);
    CHECK(csv.find("missing:") != std::string::npos);
    const auto j = to_json(r);
    CHECK(j.contains("sweep"));
    CHECK(j["sweep"].size() == 2);
}

TEST_CASE("exit bound check requires a driftless problem") {
    SdeProblem p;
    GlobalParams g;
    p.drift = make_field({"constant_vector", {}}, g);
    p.sigma = Diffusion::scaled_identity(3, 1.0);
    p.x0 = {0.0, 0.0, 0.0};
    p.params = g;
    MonteCarloOptions mc;
    mc.n_paths = 100;
    CHECK_THROWS_AS(exit_bound_check({0.5, 1.0}, p, exit_test_one(3), {4.0, 4.0, Ordering::SpaceInner, true}, mc), LabError);
}

TEST_CASE("SVG plots are well formed") {
    Series s;
    s.name = "a<b";
    s.x = {1.0, 2.0, 4.0};
    s.y = {1.0, 4.0, 16.0};
    const std::string svg = render_svg({s}, {"t", "x", "y", true, true});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("a<b") == std::string::npos);
}

TEST_CASE("exit bound slope is invariant under translating the start point") {
    GlobalParams g;
    SdeProblem p;
    p.drift = make_field({"zero", {}}, g);
    p.sigma = Diffusion::scaled_identity(3, 1.0);
    p.params = g;
    MonteCarloOptions mc;
    mc.n_paths = 2000;
    mc.dt = 4e-3;
    const NormSpec spec{4.0, 4.0, Ordering::SpaceInner, true};
    p.x0 = {0.0, 0.0, 0.0};
    const auto a = exit_bound_check({0.5, 1.0}, p, exit_test_one(3), spec, mc);
    p.x0 = {0.7, -1.3, 2.0};
    const auto b = exit_bound_check({0.5, 1.0}, p, exit_test_one(3), spec, mc);
    REQUIRE(a.fit);
    REQUIRE(b.fit);
    CHECK(a.fit->slope == doctest::Approx(b.fit->slope).epsilon(1e-9));
}

TEST_CASE("Brownian Krylov ratios agree between orderings when p = q") {
    GlobalParams g;
    SdeProblem p;
    p.drift = make_field({"zero", {}}, g);
    p.sigma = Diffusion::scaled_identity(3, 1.0);
    p.x0 = {0.0, 0.0, 0.0};
    p.params = g;
    MonteCarloOptions mc;
    mc.n_paths = 500;
    mc.dt = 1e-2;
    const auto fam = indicator_family(3, {1.0, 0.5}, {{0.0, 0.0}});
    KrylovNorm a, b;
    a.spec = {4.0, 4.0, Ordering::SpaceInner, true};
    b.spec = {4.0, 4.0, Ordering::TimeInner, true};
    a.beta = b.beta = 1.5;
    const auto ra = krylov_sweep(p, fam, {}, a, 1.0, mc), rb = krylov_sweep(p, fam, {}, b, 1.0, mc);
    REQUIRE(ra.sweep.size() == rb.sweep.size());
    for (std::size_t i = 0; i < ra.sweep.size(); ++i) CHECK(*ra.sweep[i].ratio == doctest::Approx(*rb.sweep[i].ratio).epsilon(1e-12));
}
