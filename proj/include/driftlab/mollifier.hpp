#pragma once

#include <optional>
#include <string>
#include <vector>

#include "driftlab/field.hpp"
#include "driftlab/morrey.hpp"
#include "driftlab/norm_spec.hpp"
#include "driftlab/quadrature.hpp"

namespace driftlab {

enum class KernelKind {
    /// eps^{-d-1} zeta(t/eps, x/eps), zeta radial in (t, x)
    SpaceTimeIsotropic,
    /// eps^{-d-2} zeta(t/eps^2, x/eps), zeta supported in (-1, 0) x B_1
    Parabolic,
};

const char* to_string(KernelKind k) noexcept;
KernelKind parse_kernel_kind(const std::string& s);

/// exp(1 - 1/(1 - s^2)) on |s| < 1, zero elsewhere. bump(0) = 1.
double bump(double s);

/// Radius r such that z -> bump(|z| / r) has unit integral over R^n.
double unit_mass_radius(int n);

class MollifierKernel {
public:
    MollifierKernel(KernelKind kind, double epsilon, int d);

    KernelKind kind() const noexcept { return kind_; }
    double epsilon() const noexcept { return eps_; }
    int dim() const noexcept { return d_; }

    /// Unscaled kernel as a function of (t, |x|).
    double base(double t, double y) const;
    /// eps-scaled kernel as a function of (s, |y|).
    double scaled(double s, double y) const;

    /// Time support [s_lo, s_hi] of the scaled kernel.
    double s_lo() const;
    double s_hi() const;
    /// Spatial support radius of the scaled kernel at time offset s.
    double reach(double s) const;
    /// Largest spatial support radius over all s.
    double max_reach() const;
    /// Largest time offset magnitude.
    double time_reach() const;

    /// Numerical integral of the scaled kernel by tensor Gauss quadrature with
    /// `per_dim` nodes per coordinate over its bounding box.
    double total_integral(int per_dim = 64) const;

    /// Radius of the isotropic (d+1)-dimensional profile.
    double iso_radius() const noexcept { return r_iso_; }

private:
    KernelKind kind_;
    double eps_;
    int d_;
    double r_iso_;
    double par_const_;
};

/// Truncation profile zeta(z) on R^{d+1}: the isotropic unit-mass bump, with zeta(0) = 1.
double truncation_profile(int d, double t, std::span<const double> x);

struct MollifyOptions {
    double rel_tol = 1e-4;
    int max_level = 4;
    /// Upper bound on quadrature nodes per evaluation.
    std::size_t max_points = 4'000'000;
};

struct MollifiedValue {
    std::vector<double> value;
    bool converged = false;
    int level = 0;
};

/// f * zeta_eps at one point by tensor Gauss quadrature over the kernel support,
/// 2^{d+1} panels first, doubled per level. Throws QuadratureFailure when the
/// refinement sequence diverges.
MollifiedValue mollify_at(const Field& f, const MollifierKernel& k, double t, std::span<const double> x,
                          const MollifyOptions& opt = {});

/// Generic mollification evaluated pointwise by mollify_at.
Field mollify(const Field& f, const MollifierKernel& k, const MollifyOptions& opt = {});

/// Radial profile of the mollification of a radial field at (t, R): the
/// convolution integral reduced to (s, rho, theta) coordinates about x. For
/// vector fields the component along x/|x| is returned.
double radial_mollified_profile(const Field& f, const MollifierKernel& k, double t, double R, QuadLevel lvl = {0});

struct TableOptions {
    int n_radius = 320;
    int n_time = 160;
    /// Table extends to this many kernel reaches beyond the last breakpoint
    /// (or to this many reaches from the center for unbounded fields).
    double far_reaches = 64.0;
    QuadLevel level{0};
    int workers = 1;
    /// When set, only the part of the table covering this cylinder is built;
    /// points outside it are evaluated directly.
    std::optional<ParabolicCylinder> region;
};

/// Mollification through tabulated reductions: radial fields via a (t, R)
/// table, temporal fields via a t table, sums term by term; any other field
/// falls back to `mollify`.
Field mollify_fast(const Field& f, const MollifierKernel& k, const TableOptions& opt = {});

/// f(t, x) * zeta(eps t, eps x).
Field truncate_support(const Field& f, double epsilon);

struct ConvergenceRow {
    double epsilon = 0.0;
    SupResult morrey;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    /// beta_prime <= beta: outside the regime where the table must decrease.
    bool hypothesis_warning = false;
    bool strictly_decreasing = false;
    double last_over_first = 0.0;
};

/// Morrey E_{p,q,beta'} norms of (f - f^(eps)) I_C along a ladder of widths.
ConvergenceReport convergence_report(const Field& f, const ParabolicCylinder& c, const NormSpec& spec, double beta,
                                     double beta_prime, const std::vector<double>& eps_ladder, KernelKind kind,
                                     const SearchOptions& search = {}, const TableOptions& table = {});

struct ReplacementRow {
    double epsilon = 0.0;
    double value = 0.0;
};

/// int_{B_R(0)} sup_{t in grid} |b^(eps) - b|^exponent dx for each width, the
/// sup taken over n_t equally spaced times in [t_lo, t_hi]. Diagnostic only.
std::vector<ReplacementRow> replacement_diagnostic(const Field& b, const std::vector<double>& eps_ladder, KernelKind kind,
                                                   double R, double exponent, double t_lo, double t_hi, int n_t = 17,
                                                   QuadLevel lvl = {1}, const TableOptions& table = {});

}  // namespace driftlab
