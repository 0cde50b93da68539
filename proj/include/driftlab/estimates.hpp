#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "driftlab/field.hpp"
#include "driftlab/mollifier.hpp"
#include "driftlab/morrey.hpp"
#include "driftlab/norm_spec.hpp"
#include "driftlab/simulator.hpp"

namespace driftlab {

enum class Verdict { Bounded, ExponentMatch, Violated, Inconclusive };

const char* to_string(Verdict v) noexcept;

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    /// Standard error of the slope propagated from per-point standard errors.
    double slope_se = 0.0;
};

/// OLS fit of y on x; `y_se` (may be empty) feeds the slope standard error.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& y_se = {});

struct SweepRow {
    std::string label;
    double param = 0.0;
    std::optional<Estimate> lhs;
    std::optional<double> rhs;
    std::optional<double> scale;
    std::optional<double> ratio;
    std::optional<double> ratio_se;
    /// Report-specific columns, in a fixed order per report kind.
    std::vector<std::pair<std::string, std::optional<double>>> extra;
    std::vector<std::string> flags;
};

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct EstimateReport {
    std::string name;
    std::string citation;
    std::string swept;
    Verdict verdict = Verdict::Inconclusive;
    std::vector<SweepRow> sweep;
    std::optional<LinearFit> fit;
    std::vector<Check> checks;
    /// Extra machine-readable results.
    nlohmann::json summary = nlohmann::json::object();
    std::vector<std::string> notes;

    bool all_checks_pass() const;
};

/// Deterministic JSON (no timings).
nlohmann::json to_json(const EstimateReport& r);
/// One row per sweep cell. Fixed columns
/// label,param,lhs_mean,lhs_se,lhs_ci_lo,lhs_ci_hi,lhs_n,rhs,scale,ratio,ratio_se
/// then the report's extra columns, then `flags`. Missing values are empty
/// cells and add a `missing:<column>` flag.
std::string to_csv(const EstimateReport& r);
/// Fixed-width text table.
std::string to_table(const EstimateReport& r);

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
};

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> y_err;
    bool line = false;
};

std::string render_svg(const std::vector<Series>& series, const PlotSpec& spec);

struct MonteCarloOptions {
    std::size_t n_paths = 10000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    int workers = 1;
};

/// Volume of B_r1(0) intersect B_r2(y) with |y| = dist, in R^d.
double ball_intersection_volume(int d, double r1, double r2, double dist);

/// Mixed norm of the indicator of `ind` over the cylinder `c` (averaged when
/// spec.normalized). The indicator factors in (t, x), so both orderings agree.
double indicator_norm(const ParabolicCylinder& ind, const ParabolicCylinder& c, const NormSpec& spec);

/// How the right-hand side norm of the Krylov estimate is measured.
struct KrylovNorm {
    NormSpec spec;
    /// Morrey exponent; when empty the plain mixed norm over `domain` is used.
    std::optional<double> beta;
    double rho_max = 1.0;
    std::optional<ParabolicCylinder> domain;
    SearchOptions search;
};

struct KrylovMember {
    std::string label;
    Field f;
    /// Set for cylinder indicators: the norm is then computed from exact overlaps.
    std::optional<ParabolicCylinder> indicator;
};

/// Indicators of C_r(t0, x0 e_1) for every radius and (t0, x0) location.
std::vector<KrylovMember> indicator_family(int d, const std::vector<double>& radii,
                                           const std::vector<std::pair<double, double>>& locations);

double krylov_member_norm(const KrylovMember& m, const KrylovNorm& norm);

/// Ratios E int_0^T f(s, x_s) ds / ||f|| over `base` and `base + extra`.
/// Verdict "bounded" when the sup changes by < 10% under the enrichment and
/// no enriched ratio exceeds the base sup by more than 3 standard errors.
EstimateReport krylov_sweep(const SdeProblem& problem, const std::vector<KrylovMember>& base,
                            const std::vector<KrylovMember>& extra, const KrylovNorm& norm, double T,
                            const MonteCarloOptions& mc);

struct ExitTest {
    std::string label;
    /// Test function for the cylinder C_R(0, x).
    std::function<Field(const ParabolicCylinder&)> make;
    /// Average norm over C_R; defaults to the quadrature engine.
    std::function<double(const ParabolicCylinder&, const NormSpec&)> norm;
};

ExitTest exit_test_one(int d);
/// Indicator of the concentric inner cylinder C_{R/2}(t0, x).
ExitTest exit_test_inner_half(int d);

/// lhs(R) = E int_0^tau f(s, x_s) ds with tau the first exit from C_R(0, x),
/// simulated with dt = mc.dt * R^2 per radius; slope of log(lhs / avg norm)
/// against log R compared with 2.
EstimateReport exit_bound_check(const std::vector<double>& radii, const SdeProblem& problem, const ExitTest& test,
                                const NormSpec& norm, const MonteCarloOptions& mc, double slope_tol = 0.05);

/// u with analytic time derivative and Hessian on C_R.
struct Manufactured {
    std::string label;
    std::function<double(double, std::span<const double>)> u;
    std::function<double(double, std::span<const double>)> u_t;
    /// Row-major d x d Hessian.
    std::function<void(double, std::span<const double>, std::span<double>)> hess;
};

/// u = c (R^2 - t)^m (R^2 - |x - x0|^2)^n / R^(2m + 2n) on C_R(0, x0).
Manufactured polynomial_barrier(int d, double R, int m, int n, const Point& x0, double c = 1.0);

using DiffusionMatrixFn = std::function<void(double, std::span<const double>, std::span<double>)>;

/// L0 u = u_t + a^{ij} D_ij u as a scalar field.
Field barrier_operator(const Manufactured& u, int d, const DiffusionMatrixFn& a);

struct BarrierMember {
    int m = 1;
    int n = 1;
    double c = 1.0;
};

/// |u(0, x0)| / (R^2 avg ||L0 u||_{L_{p,q}(C_R)}) over radii and a family of
/// manufactured barriers. Throws BoundaryViolation when u fails to vanish on
/// the lateral or top boundary at probe points (tolerance 1e-8).
EstimateReport barrier_check(const std::vector<BarrierMember>& base, const std::vector<BarrierMember>& extra,
                             const std::vector<double>& radii, const Point& x0, const DiffusionMatrixFn& a,
                             const NormSpec& norm);

/// Probes u on the parabolic boundary of C_R(0, x0); throws BoundaryViolation.
void check_boundary_vanishing(const Manufactured& u, const ParabolicCylinder& c, double tol = 1e-8);

struct CollapseConfig {
    int d = 3;
    double T = 1.0;
    double dt = 1e-4;
    std::size_t n_paths = 4000;
    std::uint64_t seed = 1;
    int workers = 1;
    KernelKind kernel = KernelKind::SpaceTimeIsotropic;
    double window_lo = 0.2;
    double window_hi = 1.0;
    int checkpoints = 17;
    /// Collar radius as a multiple of the mollification width.
    double collar_factor = 2.0;
    /// Fixed-radius neighbourhood of the origin whose occupation is also reported.
    double near_radius = 0.1;
    /// Relative tolerance on the slope 2d(1 - eps) for eps < 1.
    double slope_tol = 0.05;
};

/// Mollified simulation of dx = eps (-d x/|x|^2) dt + sqrt 2 dw from x0 = 0,
/// one cell per (eps, width).
EstimateReport collapse_experiment(const std::vector<double>& eps_sweep, const std::vector<double>& widths,
                                   const CollapseConfig& cfg);

/// Same diagnostics for the time-weighted radial drift with alpha + beta = 1;
/// exploratory, no verdict.
EstimateReport nonexistence_scan(double alpha, const std::vector<double>& eps_sweep, const std::vector<double>& widths,
                                 const CollapseConfig& cfg);

struct ScalingConfig {
    Point x0;
    double T = 1.0;
    double dt = 1e-3;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    int workers = 1;
    int checkpoints = 5;
    /// Direct-mode cap length for the original process; the scaled process uses cap / rho.
    double drift_cap = 0.0;
    bool check_norm = true;
    NormSpec norm;
    SearchOptions search;
    double norm_tol = 0.01;
};

/// Compares x_t with rho y_{t / rho^2}, y driven by the parabolically scaled
/// coefficients, by first and second moments at checkpoint times; optionally
/// compares b_1(b~) with b_rho(b).
EstimateReport scaling_invariance_check(const Field& b, const Diffusion& sigma, double rho, const ScalingConfig& cfg);

}  // namespace driftlab
