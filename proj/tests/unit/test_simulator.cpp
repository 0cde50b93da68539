#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "driftlab/drift_zoo.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/simulator.hpp"

using namespace driftlab;

namespace {

SdeProblem brownian(int d, double sigma = 1.0) {
    SdeProblem p;
    GlobalParams g;
    g.d = d;
    g.d0 = 0.75 * d;
    p.drift = make_field({"zero", {}}, g);
    p.sigma = Diffusion::scaled_identity(d, sigma);
    p.x0.assign(static_cast<std::size_t>(d), 0.0);
    p.params = g;
    return p;
}

}  // namespace

TEST_CASE("Brownian increments have the right mean and covariance") {
    const SdeProblem p = brownian(2);
    const LazySource src(p, SimOptions{20000, 0.01, 1.0, 9, 2, std::nullopt});
    std::vector<PathDiag> diags;
    const auto v = per_path(src, 5, 2, [](std::size_t, std::span<const double> s, const PathDiag&, std::span<double> o) {
        const auto x = s.subspan(s.size() - 2);
        o[0] = x[0];
        o[1] = x[1];
        o[2] = x[0] * x[0];
        o[3] = x[1] * x[1];
        o[4] = x[0] * x[1];
    }, &diags);
    const double n = 20000;
    CHECK(std::abs(summarize(v, diags, 5, 0).mean) < 4.0 / std::sqrt(n));
    CHECK(std::abs(summarize(v, diags, 5, 1).mean) < 4.0 / std::sqrt(n));
    CHECK(summarize(v, diags, 5, 2).mean == doctest::Approx(1.0).epsilon(4.0 * std::sqrt(2.0 / n)));
    CHECK(summarize(v, diags, 5, 3).mean == doctest::Approx(1.0).epsilon(4.0 * std::sqrt(2.0 / n)));
    CHECK(std::abs(summarize(v, diags, 5, 4).mean) < 4.0 / std::sqrt(n));
}

TEST_CASE("constant drift shifts the mean exactly") {
    SdeProblem p = brownian(1, 0.5);
    p.params.delta = 0.1;
    GlobalParams g = p.params;
    p.drift = make_field({"constant_vector", {{"value", 2.0}}}, g);
    const LazySource src(p, SimOptions{4000, 0.01, 1.0, 3, 1, std::nullopt});
    std::vector<PathDiag> diags;
    const auto v = per_path(src, 1, 1, [](std::size_t, std::span<const double> s, const PathDiag&, std::span<double> o) {
        o[0] = s.back();
    }, &diags);
    const Estimate e = summarize(v, diags);
    CHECK(std::abs(e.mean - 2.0) < 4.0 * e.se);
    CHECK(e.se == doctest::Approx(0.5 / std::sqrt(4000.0)).epsilon(0.1));
}

TEST_CASE("results do not depend on the worker count") {
    const SdeProblem p = brownian(3);
    const SimOptions a{300, 0.01, 0.5, 17, 1, std::nullopt};
    SimOptions b = a;
    b.workers = 4;
    const PathEnsemble e1 = simulate(p, a), e2 = simulate(p, b);
    CHECK(e1.states == e2.states);
}

TEST_CASE("occupation of f = 1 equals the horizon") {
    const SdeProblem p = brownian(2);
    GlobalParams g = p.params;
    const Field one = make_field({"constant", {{"value", 1.0}}}, g);
    const LazySource src(p, SimOptions{100, 0.01, 0.73, 1, 1, std::nullopt});
    const Estimate e = occupation_functional(src, one, {});
    CHECK(e.mean == doctest::Approx(0.73).epsilon(1e-12));
    CHECK(e.se == doctest::Approx(0.0));
}

TEST_CASE("occupation of |x|^2 follows the heat kernel") {
    // E int_0^T |w_s|^2 ds = d T^2 / 2; the left sum on a grid gives d T (T - dt) / 2.
    const int d = 3;
    const SdeProblem p = brownian(d);
    GlobalParams g = p.params;
    const Field sq = make_field({"inverse_power", {{"a", -2.0}}}, g);
    const double T = 1.0, dt = 0.01;
    const LazySource src(p, SimOptions{20000, dt, T, 4, 2, std::nullopt});
    const Estimate e = occupation_functional(src, sq, {}, 2);
    CHECK(std::abs(e.mean - d * T * (T - dt) / 2.0) < 4.0 * e.se);
}

TEST_CASE("exit times are capped by the cylinder height") {
    const SdeProblem p = brownian(2);
    const ParabolicCylinder c(0.0, {0.0, 0.0}, 0.05);
    const LazySource src(p, SimOptions{50, 0.01, 1.0, 2, 1, std::nullopt});
    const ExitTimes ex = first_exit(src, c);
    for (double t : ex.tau) {
        CHECK(t > 0.0);
        CHECK(t <= c.time_extent() + 1e-15);
    }
}

TEST_CASE("degenerate diffusion is rejected and zero gaps have zero modulus") {
    const SdeProblem p = brownian(2, 0.0);
    CHECK_THROWS_AS(p.validate(), LabError);
    SdeProblem q = brownian(2);
    const LazySource ok(q, SimOptions{40, 0.01, 1.0, 2, 1, std::nullopt});
    CHECK(modulus_moment(ok, 2.0, 0.3, 0.3).mean == 0.0);
    CHECK(modulus_moment(ok, 2.0, 0.3, 0.5).mean > 0.0);
}

TEST_CASE("path ensembles round-trip through disk") {
    const SdeProblem p = brownian(2);
    const PathEnsemble e = simulate(p, SimOptions{20, 0.05, 1.0, 8, 1, std::nullopt});
    const std::string base = "unit_paths_tmp";
    save_ensemble(e, base);
    const PathEnsemble f = load_ensemble(base);
    CHECK(f.d == e.d);
    CHECK(f.n_paths == e.n_paths);
    CHECK(f.n_steps == e.n_steps);
    CHECK(f.seed == e.seed);
    CHECK(f.scheme == e.scheme);
    CHECK(f.states == e.states);
    std::filesystem::remove(base + ".bin");
    std::filesystem::remove(base + ".json");
}

TEST_CASE("blow-up paths are flagged, not propagated") {
    SdeProblem p = brownian(1);
    p.drift = Field::vector(1, [](double, std::span<const double> x, std::span<double> o) { o[0] = 50.0 * x[0] * x[0] + 1.0; }, {});
    p.blowup_bound = 1e3;
    const PathEnsemble e = simulate(p, SimOptions{50, 0.01, 1.0, 1, 1, std::nullopt});
    CHECK(e.flagged() > 0);
    for (double v : e.states) CHECK(std::isfinite(v));
}

TEST_CASE("too few unflagged paths give a degenerate interval") {
    std::vector<double> v(10, 1.0);
    std::vector<PathDiag> d(10);
    CHECK_THROWS_AS(summarize(v, d), LabError);
}

TEST_CASE("invalid simulation options are rejected") {
    CHECK_THROWS_AS((SimOptions{0, 0.01, 1.0, 1, 1, std::nullopt}.validate()), LabError);
    CHECK_THROWS_AS((SimOptions{10, -0.01, 1.0, 1, 1, std::nullopt}.validate()), LabError);
}

TEST_CASE("exit-time bias under dt halving is within noise") {
    const SdeProblem p = brownian(2);
    const ParabolicCylinder c(0.0, {0.0, 0.0}, 0.5);
    std::vector<Estimate> est;
    for (double dt : {2e-3, 1e-3}) {
        const LazySource src(p, SimOptions{8000, dt, 0.25, 21, 1, std::nullopt});
        const ExitTimes ex = first_exit(src, c);
        est.push_back(summarize(ex.tau, ex.diags));
    }
    const double se = std::hypot(est[0].se, est[1].se);
    CHECK(std::abs(est[0].mean - est[1].mean) < 4.0 * se + 0.02 * est[1].mean);
}
