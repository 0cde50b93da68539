#include "doctest.h"

#include <cmath>

#include "driftlab/drift_zoo.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/mixed_norm.hpp"
#include "driftlab/morrey.hpp"
#include "driftlab/scaling.hpp"

using namespace driftlab;

namespace {

GlobalParams params(int d) {
    GlobalParams g;
    g.d = d;
    g.d0 = 0.75 * d;
    return g;
}

}  // namespace

TEST_CASE("averaged L2 norm of |x|^-1 in d = 3 is sqrt(3)/r") {
    // (|B_r|^-1 int_{B_r} |x|^-2 dx)^(1/2) = (3 / r^2)^(1/2)
    const Field f = make_field({"inverse_power", {{"a", 1.0}}}, params(3));
    for (double r : {1.0, 0.5, 0.25, 0.125}) {
        const ParabolicCylinder c(0.0, {0.0, 0.0, 0.0}, r);
        const NormValue v = mixed_norm(f, c, {2.0, 2.0, Ordering::SpaceInner, true});
        CHECK(v.value == doctest::Approx(std::sqrt(3.0) / r).epsilon(1e-3));
    }
}

TEST_CASE("norm of a constant is its modulus times the volume factor") {
    const Field f = make_field({"constant", {{"value", -2.5}}}, params(2));
    const ParabolicCylinder c(0.3, {0.1, -0.2}, 0.7);
    for (auto ord : {Ordering::SpaceInner, Ordering::TimeInner}) {
        CHECK(mixed_norm(f, c, {3.0, 5.0, ord, true}).value == doctest::Approx(2.5).epsilon(1e-9));
        const double vol_x = std::numbers::pi * 0.49, vol_t = 0.49;
        CHECK(mixed_norm(f, c, {3.0, 5.0, ord, false}).value ==
              doctest::Approx(2.5 * std::pow(vol_x, 1.0 / 3.0) * std::pow(vol_t, 1.0 / 5.0)).epsilon(1e-9));
    }
}

TEST_CASE("orderings agree when p = q and obey Minkowski when p > q") {
    const GlobalParams g = params(2);
    const Field f = make_field({"remark_1_28_1", {}}, g);
    const ParabolicCylinder c(0.2, {0.6, 0.1}, 0.4);
    const double a = mixed_norm(f, c, {3.0, 3.0, Ordering::SpaceInner, true}).value;
    const double b = mixed_norm(f, c, {3.0, 3.0, Ordering::TimeInner, true}).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-4));
    const double s = mixed_norm(f, c, {4.0, 2.0, Ordering::SpaceInner, true}).value;
    const double t = mixed_norm(f, c, {4.0, 2.0, Ordering::TimeInner, true}).value;
    CHECK(t <= s * (1.0 + 1e-6));
}

TEST_CASE("norm is absolutely homogeneous") {
    const GlobalParams g = params(3);
    const Field f = make_field({"gaussian", {{"s", 0.3}}}, g);
    const ParabolicCylinder c(0.0, {0.1, 0.0, 0.0}, 0.5);
    const NormSpec spec{2.5, 3.0, Ordering::SpaceInner, true};
    const double base = mixed_norm(f, c, spec).value;
    CHECK(mixed_norm(scaled(f, -3.0), c, spec).value == doctest::Approx(3.0 * base).epsilon(1e-10));
}

TEST_CASE("engine matches the closed-form oracle for remark_1_28_1") {
    const GlobalParams g = params(2);
    const DriftSpec s{"remark_1_28_1", {}};
    const Field f = make_field(s, g);
    const NormSpec spec{8.0 / 3.0, 4.0, Ordering::TimeInner, true};
    for (int k = 0; k <= 6; k += 2) {
        const ParabolicCylinder c(0.0, {0.0, 0.0}, std::ldexp(1.0, -k));
        const auto oracle = analytic_norm_oracle(s, c, spec, g);
        REQUIRE(oracle);
        CHECK(mixed_norm(f, c, spec).value == doctest::Approx(*oracle).epsilon(0.02));
    }
}

TEST_CASE("non-integrable singularities are reported") {
    const Field f = make_field({"inverse_power", {{"a", 2.0}}}, params(3));
    const ParabolicCylinder c(0.0, {0.0, 0.0, 0.0}, 1.0);
    CHECK_THROWS_AS(mixed_norm(f, c, {2.0, 2.0, Ordering::SpaceInner, true}), LabError);
}

TEST_CASE("spatial average over an off-center ball is at most 2^d times the centered average on B_2r") {
    const GlobalParams g = params(3);
    const Field f = make_field({"inverse_power", {{"a", 2.25}}}, g);
    const NormSpec spec{1.0, 1.0, Ordering::SpaceInner, true};
    const double r = 0.2;
    const double centered = mixed_norm(f, ParabolicCylinder(0.0, {0.0, 0.0, 0.0}, 2 * r), spec).value;
    for (double c : {0.05, 0.2, 0.4}) {
        const double off = mixed_norm(f, ParabolicCylinder(0.0, {c, 0.0, 0.0}, r), spec).value;
        CHECK(off <= 8.0 * centered * (1.0 + 1e-3));
    }
}

TEST_CASE("admissibility predicate") {
    const GlobalParams g = params(2);
    CHECK(admissible(8.0 / 3.0, 4.0, g, Ordering::TimeInner).admissible);
    CHECK_FALSE(admissible(1.0, 1.0, g, Ordering::TimeInner).admissible);
    CHECK_THROWS_AS((NormSpec{0.5, 2.0, Ordering::SpaceInner, true}.validate()), LabError);
}

TEST_CASE("parabolic scaling leaves the inverse-square drift fixed") {
    const GlobalParams g = params(3);
    const Field b = make_field({"inverse_radial", {{"eps", 1.0}}}, g);
    for (double rho : {0.5, 0.125, 3.0}) {
        const Field s = parabolic_scale(b, rho, ScaleKind::Drift);
        for (double x : {0.3, 1.7}) {
            const Point p{x, -0.2, 0.4};
            std::array<double, 3> u{}, v{};
            b.eval(0.4, p, u);
            s.eval(0.4, p, v);
            for (int i = 0; i < 3; ++i) CHECK(v[i] == doctest::Approx(u[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("Morrey norm of a cylinder indicator") {
    // rho^beta (|C_r| / |C_rho|)^(1/p) with p = q: for beta > (d + 2)/p the
    // sup sits at the largest admissible radius, giving rho_max^(beta - 5/4) r^(5/4).
    const GlobalParams g = params(3);
    const double r = 0.25;
    const Field f = make_field({"indicator_cylinder", {{"t0", 0.1}, {"rho", r}}}, g);
    SearchOptions so;
    so.levels = 4;
    const SupResult s = morrey_norm(f, {4.0, 4.0, Ordering::SpaceInner, true}, 1.5, 1.0, so);
    CHECK(s.value == doctest::Approx(std::pow(r, 1.25)).epsilon(0.02));
}
