#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "driftlab/drift_zoo.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/grid_field.hpp"
#include "driftlab/mollifier.hpp"

using namespace driftlab;

namespace {

GlobalParams params(int d) {
    GlobalParams g;
    g.d = d;
    g.d0 = 0.75 * d;
    return g;
}

double vnorm(const Field& f, double t, const Point& x) {
    std::vector<double> v(static_cast<std::size_t>(f.components()));
    f.eval(t, x, v);
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("registry examples by direct substitution") {
    const Field b = make_field({"inverse_radial", {{"eps", 1.0}}}, params(3));
    std::array<double, 3> v{};
    b.eval(0.0, Point{1.0, 0.0, 0.0}, v);
    CHECK(v[0] == doctest::Approx(-3.0));
    CHECK(v[1] == 0.0);
    CHECK(v[2] == 0.0);

    const Field e = make_field({"example_12_21_4", {{"alpha", 0.5}, {"beta", 0.5}}}, params(3));
    CHECK(vnorm(e, 0.25, {0.25, 0.0, 0.0}) == doctest::Approx(4.0));

    const Field r = make_field({"remark_1_28_1", {}}, params(2));
    CHECK(r.value(0.25, Point{0.5, 0.0}) == doctest::Approx(2.0));
}

TEST_CASE("magnitudes agree with the documented formulas off the singular set") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0), T(0.01, 0.99);
    const int d = 3;
    const Field ir = make_field({"inverse_radial", {{"eps", 0.7}}}, params(d));
    const Field ex = make_field({"example_12_21_4", {{"alpha", 0.3}, {"beta", 0.7}, {"eps", 2.0}}}, params(d));
    const Field rm = make_field({"remark_1_28_1", {{"c", 1.5}}}, params(d));
    const Field op = make_field({"opening_example", {{"c", 0.2}, {"c1", 0.0}}}, params(d));
    for (int i = 0; i < 100; ++i) {
        Point x{U(gen) * 0.57, U(gen) * 0.57, U(gen) * 0.57};
        const double t = T(gen);
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        CHECK(vnorm(ir, t, x) == doctest::Approx(0.7 * d / r).epsilon(1e-12));
        CHECK(vnorm(ex, t, x) == doctest::Approx(2.0 / (std::pow(t, 0.3) * std::pow(r, 0.7))).epsilon(1e-12));
        CHECK(std::abs(rm.value(t, x)) == doctest::Approx(1.5 / r * std::pow(r / std::sqrt(t), 1.0 / (d + 1))).epsilon(1e-12));
        CHECK(vnorm(op, t, x) == doctest::Approx(0.2 / r).epsilon(1e-12));
    }
}

TEST_CASE("truncated entries vanish outside their support") {
    const Field ex = make_field({"example_12_21_4", {}}, params(3));
    CHECK(vnorm(ex, 0.5, {1.2, 0.0, 0.0}) == 0.0);
    CHECK(vnorm(ex, 1.5, {0.5, 0.0, 0.0}) == 0.0);
    CHECK(vnorm(ex, 1.0, {1.0, 0.0, 0.0}) > 0.0);
    CHECK_FALSE(ex.singular().empty());
}

TEST_CASE("registry validation") {
    CHECK_THROWS_AS(make_field({"no_such_field", {}}, params(3)), LabError);
    CHECK_THROWS_AS(make_field({"example_12_21_4", {{"alpha", 0.5}, {"beta", 0.6}}}, params(3)), LabError);
    CHECK_THROWS_AS(make_field({"inverse_radial", {{"bogus", 1.0}}}, params(3)), LabError);
    for (const auto& e : zoo_registry()) {
        CHECK_FALSE(e.citation.empty());
        CHECK_NOTHROW(make_field({e.name, {}}, params(3)));
    }
}

TEST_CASE("mollifier kernels have unit mass") {
    for (int d : {1, 2, 3})
        for (auto k : {KernelKind::SpaceTimeIsotropic, KernelKind::Parabolic}) {
            const MollifierKernel m(k, 0.1, d);
            CHECK(m.total_integral() == doctest::Approx(1.0).epsilon(1e-6));
        }
}

TEST_CASE("parabolic kernel lives in the past") {
    const MollifierKernel m(KernelKind::Parabolic, 0.2, 2);
    CHECK(m.s_hi() <= 0.0);
    CHECK(m.s_lo() == doctest::Approx(-0.04));
}

TEST_CASE("truncation profile equals one at the origin and stays in [0, 1]") {
    CHECK(truncation_profile(3, 0.0, Point{0.0, 0.0, 0.0}) == 1.0);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const double z = truncation_profile(2, U(gen), Point{U(gen), U(gen)});
        CHECK(z >= 0.0);
        CHECK(z <= 1.0);
    }
}

TEST_CASE("mollification preserves constants and affine fields") {
    const GlobalParams g = params(2);
    const Field c = make_field({"constant", {{"value", 3.25}}}, g);
    const MollifierKernel k(KernelKind::SpaceTimeIsotropic, 0.2, 2);
    const auto mc = mollify_at(c, k, 0.3, Point{0.1, 0.4});
    CHECK(mc.value[0] == doctest::Approx(3.25).epsilon(1e-6));

    const Field lin = Field::scalar(2, [](double t, std::span<const double> x) { return 1.0 + 2.0 * x[0] - x[1] + 0.5 * t; }, {});
    const auto ml = mollify_at(lin, k, 0.3, Point{0.1, 0.4});
    CHECK(ml.value[0] == doctest::Approx(1.0 + 0.2 - 0.4 + 0.15).epsilon(1e-6));
}

TEST_CASE("gridded fields round-trip through both formats") {
    const GlobalParams g = params(2);
    const Field f = make_field({"gaussian", {{"s", 0.5}}}, g);
    GridData shape;
    shape.d = 2;
    shape.counts = {3, 5, 4};
    shape.origin = {0.0, -1.0, -1.0};
    shape.spacing = {0.5, 0.5, 0.6};
    const GridData a = sample_field(f, shape);
    const std::string dir = "unit_grid_tmp";
    std::filesystem::create_directories(dir);
    write_grid_text(a, dir + "/g.grid");
    write_grid_binary(a, dir + "/g.bin");
    for (const auto* name : {"/g.grid", "/g.bin"}) {
        const GridData b = read_grid(dir + name);
        CHECK(b.counts == a.counts);
        REQUIRE(b.values.size() == a.values.size());
        for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(b.values[i] == doctest::Approx(a.values[i]).epsilon(1e-15));
        const Field h = grid_to_field(b);
        CHECK(h.value(0.5, Point{0.0, 0.2}) == doctest::Approx(f.value(0.5, Point{0.0, 0.2})).epsilon(1e-12));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("replacement diagnostic vanishes for smooth drifts and shrinks with the width") {
    const GlobalParams g = params(3);
    const auto flat = replacement_diagnostic(make_field({"constant_vector", {{"value", 2.0}}}, g), {0.1}, KernelKind::SpaceTimeIsotropic,
                                             1.0, 2.25, 0.0, 1.0, 3);
    CHECK(flat.at(0).value < 1e-9);
    const auto sing = replacement_diagnostic(make_field({"inverse_radial", {{"eps", 1.0}}}, g), {0.2, 0.1, 0.05},
                                             KernelKind::SpaceTimeIsotropic, 1.0, 2.25, 0.0, 1.0, 3);
    CHECK(sing[0].value > sing[1].value);
    CHECK(sing[1].value > sing[2].value);
}
