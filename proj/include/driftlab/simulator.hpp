#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftlab/cylinder.hpp"
#include "driftlab/field.hpp"
#include "driftlab/norm_spec.hpp"

namespace driftlab {

/// Diffusion coefficient sigma(t, x), a d x d matrix stored row-major.
class Diffusion {
public:
    using MatrixFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

    Diffusion() = default;
    static Diffusion scaled_identity(int d, double s);
    static Diffusion matrix(int d, std::vector<double> m);
    static Diffusion field(int d, MatrixFn fn);

    int dim() const noexcept { return d_; }
    bool is_constant() const noexcept { return !fn_; }
    /// s when sigma = s * I everywhere.
    std::optional<double> scalar() const noexcept { return scalar_; }
    const std::vector<double>& constant_matrix() const noexcept { return m_; }

    void eval(double t, std::span<const double> x, std::span<double> out) const;

private:
    int d_ = 0;
    std::vector<double> m_;
    std::optional<double> scalar_;
    MatrixFn fn_;
};

struct SdeProblem {
    Field drift;
    Diffusion sigma;
    double t0 = 0.0;
    Point x0;
    GlobalParams params;
    /// Direct mode: when > 0 the drift step is capped at |b| dt <= 0.5 * drift_cap.
    double drift_cap = 0.0;
    /// Paths whose |x| exceeds this are flagged and frozen.
    double blowup_bound = 1e8;

    /// Checks dimensions and the ellipticity bounds
    /// delta |xi|^2 <= a xi.xi <= |xi|^2 / delta, a = sigma sigma^T / 2,
    /// on a probe grid around x0 over [t0, t0 + probe_T]. Throws InvalidParams.
    void validate(double probe_T = 1.0) const;
};

struct SimOptions {
    std::size_t n_paths = 1000;
    double dt = 1e-3;
    double T = 1.0;
    std::uint64_t seed = 1;
    int workers = 1;
    /// Stop stepping a path once (t, x) leaves this cylinder; the rest of the
    /// path repeats the first outside state.
    std::optional<ParabolicCylinder> stop_on_exit;

    std::size_t n_steps() const;
    void validate() const;
};

enum class PathStatus : std::uint8_t { Ok = 0, BlowUp = 1, NonFinite = 2 };

const char* to_string(PathStatus s) noexcept;

struct PathDiag {
    PathStatus status = PathStatus::Ok;
    /// First step index at which the status changed (or the path stopped on exit).
    std::uint32_t event_step = 0;
    std::uint64_t cap_hits = 0;
    /// Largest |b(t_k, x_k)| dt seen along the path, before capping.
    double max_impulse = 0.0;
};

/// Runs one path into `states` ((n_steps + 1) * d values, step-major).
void simulate_path(const SdeProblem& problem, const SimOptions& opt, std::size_t path, std::vector<double>& states,
                   PathDiag& diag);

inline constexpr const char* kSchemeTag = "euler-maruyama";

struct PathEnsemble {
    int d = 0;
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    double dt = 0.0;
    double T = 0.0;
    double t0 = 0.0;
    std::uint64_t seed = 0;
    std::string scheme = kSchemeTag;
    /// Path-major, then step, then coordinate.
    std::vector<double> states;
    std::vector<PathDiag> diags;

    std::span<const double> path(std::size_t i) const {
        const std::size_t len = (n_steps + 1) * static_cast<std::size_t>(d);
        return {states.data() + i * len, len};
    }
    std::size_t flagged() const;
    std::uint64_t cap_hits() const;
};

PathEnsemble simulate(const SdeProblem& problem, const SimOptions& opt);

/// Writes `<base>.bin` (columnar: header then one column per coordinate,
/// each holding n_paths x (n_steps + 1) doubles, then per-path diagnostics)
/// and `<base>.json` (manifest).
void save_ensemble(const PathEnsemble& ens, const std::string& base);
PathEnsemble load_ensemble(const std::string& base);

/// Read access to paths, stored or regenerated on demand.
class PathSource {
public:
    virtual ~PathSource() = default;
    virtual int dim() const = 0;
    virtual std::size_t n_paths() const = 0;
    virtual std::size_t n_steps() const = 0;
    virtual double dt() const = 0;
    virtual double t0() const = 0;
    virtual void path(std::size_t i, std::vector<double>& states, PathDiag& diag) const = 0;

    double time(std::size_t k) const { return t0() + static_cast<double>(k) * dt(); }
};

class EnsembleSource final : public PathSource {
public:
    explicit EnsembleSource(const PathEnsemble& ens) : ens_(ens) {}
    int dim() const override { return ens_.d; }
    std::size_t n_paths() const override { return ens_.n_paths; }
    std::size_t n_steps() const override { return ens_.n_steps; }
    double dt() const override { return ens_.dt; }
    double t0() const override { return ens_.t0; }
    void path(std::size_t i, std::vector<double>& states, PathDiag& diag) const override;

private:
    const PathEnsemble& ens_;
};

/// Regenerates each path from its RNG stream; nothing is stored. Gives the
/// same states as `simulate` with the same problem and options.
class LazySource final : public PathSource {
public:
    LazySource(SdeProblem problem, SimOptions opt);
    int dim() const override { return static_cast<int>(problem_.x0.size()); }
    std::size_t n_paths() const override { return opt_.n_paths; }
    std::size_t n_steps() const override { return opt_.n_steps(); }
    double dt() const override { return opt_.dt; }
    double t0() const override { return problem_.t0; }
    void path(std::size_t i, std::vector<double>& states, PathDiag& diag) const override;

private:
    SdeProblem problem_;
    SimOptions opt_;
};

/// Per-path statistics: fn(i, states, diag, out) fills `k` numbers per path.
/// Returns an n_paths x k row-major table; paths are visited in parallel and
/// stored by index.
using PathStatFn = std::function<void(std::size_t, std::span<const double>, const PathDiag&, std::span<double>)>;
std::vector<double> per_path(const PathSource& src, std::size_t k, int workers, const PathStatFn& fn,
                             std::vector<PathDiag>* diags = nullptr);

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t n = 0;
    /// Paths left out because they were flagged.
    std::size_t excluded = 0;
};

/// Mean with 95% normal CI of the values whose path is unflagged.
/// Throws DegenerateCI with fewer than 30 contributing values.
Estimate summarize(std::span<const double> values, std::span<const PathDiag> diags, std::size_t stride = 1,
                   std::size_t column = 0);

struct StopRule {
    /// Empty: integrate over the whole horizon.
    std::optional<ParabolicCylinder> exit;
};

/// E int_{t0}^{stop} f(s, x_s) ds by left Riemann sums on the path grid.
Estimate occupation_functional(const PathSource& src, const Field& f, const StopRule& stop, int workers = 1);

struct ExitTimes {
    std::vector<double> tau;
    /// Paths that neither left the ball nor reached the time cap within the horizon.
    std::vector<std::uint8_t> censored;
    std::vector<PathDiag> diags;
};

/// First exit of (t_k, x_k) from C measured from the path start, capped at
/// the time extent of C. Crossings of the lateral boundary are placed by
/// linear interpolation of |x - center| between grid points.
ExitTimes first_exit(const PathSource& src, const ParabolicCylinder& c, int workers = 1);
double exit_time_of_path(std::span<const double> states, int d, double t0, double dt, const ParabolicCylinder& c,
                         bool* censored = nullptr);

/// E sup_{u in grid, s <= u <= r} |x_u - x_s|^n.
Estimate modulus_moment(const PathSource& src, double n, double s, double r, int workers = 1);

}  // namespace driftlab
