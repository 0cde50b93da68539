#include "driftlab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Eigenvalues>
#include "json.hpp"

#include "driftlab/errors.hpp"
#include "driftlab/parallel.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

Diffusion Diffusion::scaled_identity(int d, double s) {
    Diffusion out;
    out.d_ = d;
    out.m_.assign(static_cast<std::size_t>(d * d), 0.0);
    for (int i = 0; i < d; ++i) out.m_[static_cast<std::size_t>(i * d + i)] = s;
    out.scalar_ = s;
    return out;
}

Diffusion Diffusion::matrix(int d, std::vector<double> m) {
    if (m.size() != static_cast<std::size_t>(d * d)) fail(ErrorKind::InvalidParams, "sigma matrix must have d*d entries");
    Diffusion out;
    out.d_ = d;
    out.m_ = std::move(m);
    bool diag = true;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double v = out.m_[static_cast<std::size_t>(i * d + j)];
            if (i != j && v != 0.0) diag = false;
            if (i == j && v != out.m_[0]) diag = false;
        }
    if (diag) out.scalar_ = out.m_[0];
    return out;
}

Diffusion Diffusion::field(int d, MatrixFn fn) {
    Diffusion out;
    out.d_ = d;
    out.fn_ = std::move(fn);
    return out;
}

void Diffusion::eval(double t, std::span<const double> x, std::span<double> out) const {
    if (fn_) {
        fn_(t, x, out);
        return;
    }
    std::copy(m_.begin(), m_.end(), out.begin());
}

void SdeProblem::validate(double probe_T) const {
    const int d = static_cast<int>(x0.size());
    if (d < 1 || d > kMaxDim) fail(ErrorKind::InvalidParams, "initial point must have 1..8 coordinates");
    if (!drift.valid() || drift.kind() != FieldKind::Vector || drift.dim() != d)
        fail(ErrorKind::InvalidParams, "drift must be a vector field of dimension " + std::to_string(d));
    if (sigma.dim() != d) fail(ErrorKind::InvalidParams, "sigma dimension does not match the initial point");
    if (!(params.delta > 0.0 && params.delta <= 1.0)) fail(ErrorKind::InvalidParams, "delta must lie in (0, 1]");
    if (!(blowup_bound > 0.0)) fail(ErrorKind::InvalidParams, "blowup bound must be positive");
    if (drift_cap < 0.0) fail(ErrorKind::InvalidParams, "drift cap must be nonnegative");

    // Probe grid: x0 + {-1, 0, 1}^d (at most 3^4 points), three times.
    std::vector<Point> xs;
    const int probe_dims = std::min(d, 4);
    std::size_t n = 1;
    for (int i = 0; i < probe_dims; ++i) n *= 3;
    for (std::size_t idx = 0; idx < n; ++idx) {
        Point x = x0;
        std::size_t r = idx;
        for (int i = 0; i < probe_dims; ++i) {
            x[static_cast<std::size_t>(i)] += static_cast<double>(static_cast<int>(r % 3) - 1);
            r /= 3;
        }
        xs.push_back(std::move(x));
    }
    const std::vector<double> ts = sigma.is_constant() ? std::vector<double>{t0}
                                                       : std::vector<double>{t0, t0 + 0.5 * probe_T, t0 + probe_T};
    if (sigma.is_constant()) xs.resize(1);
    std::vector<double> m(static_cast<std::size_t>(d * d));
    for (double t : ts)
        for (const auto& x : xs) {
            sigma.eval(t, x, m);
            Eigen::MatrixXd s(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) s(i, j) = m[static_cast<std::size_t>(i * d + j)];
            const Eigen::MatrixXd a = 0.5 * s * s.transpose();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
            const double lo = es.eigenvalues().minCoeff();
            const double hi = es.eigenvalues().maxCoeff();
            const double tol = 1e-12;
            if (!(lo >= params.delta - tol) || !(hi <= 1.0 / params.delta + tol))
                fail(ErrorKind::InvalidParams, "ellipticity fails at t=" + std::to_string(t) + ": eigenvalues of sigma sigma^T/2 in [" +
                                                   std::to_string(lo) + ", " + std::to_string(hi) + "], need [" +
                                                   std::to_string(params.delta) + ", " + std::to_string(1.0 / params.delta) + "]");
        }
}

std::size_t SimOptions::n_steps() const { return static_cast<std::size_t>(std::llround(T / dt)); }

void SimOptions::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorKind::InvalidParams, "dt must be positive");
    if (!(T >= dt) || !std::isfinite(T)) fail(ErrorKind::InvalidParams, "T must be at least dt");
    if (n_paths == 0) fail(ErrorKind::InvalidParams, "n_paths must be positive");
    if (n_steps() > 0xFFFFFFFFull) fail(ErrorKind::InvalidParams, "too many steps");
}

const char* to_string(PathStatus s) noexcept {
    switch (s) {
        case PathStatus::Ok: return "ok";
        case PathStatus::BlowUp: return "blow-up";
        case PathStatus::NonFinite: return "non-finite";
    }
    return "?";
}

void simulate_path(const SdeProblem& problem, const SimOptions& opt, std::size_t path, std::vector<double>& states,
                   PathDiag& diag) {
    const int d = static_cast<int>(problem.x0.size());
    const std::size_t du = static_cast<std::size_t>(d);
    const std::size_t n = opt.n_steps();
    states.resize((n + 1) * du);
    diag = PathDiag{};
    PathRng rng(opt.seed, path);

    std::copy(problem.x0.begin(), problem.x0.end(), states.begin());
    const double dt = opt.dt;
    const double sq = std::sqrt(dt);
    const auto scalar = problem.sigma.scalar();
    std::array<double, kMaxDim> b{}, z{}, next{};
    std::vector<double> sig(scalar ? 0 : du * du);
    const double cap = 0.5 * problem.drift_cap;

    std::size_t k = 0;
    bool frozen = false;
    for (; k < n; ++k) {
        const double t = problem.t0 + static_cast<double>(k) * dt;
        const std::span<const double> x(states.data() + k * du, du);
        std::span<double> bspan(b.data(), du);
        problem.drift.eval(t, x, bspan);
        double bn = 0.0;
        for (std::size_t i = 0; i < du; ++i) bn += b[i] * b[i];
        bn = std::sqrt(bn);
        double scale = dt;
        const double impulse = bn * dt;
        if (impulse > diag.max_impulse || !std::isfinite(impulse)) diag.max_impulse = impulse;
        if (cap > 0.0 && impulse > cap) {
            scale = cap / bn;
            ++diag.cap_hits;
        }
        for (std::size_t i = 0; i < du; ++i) z[i] = rng.normal() * sq;
        if (scalar) {
            for (std::size_t i = 0; i < du; ++i) next[i] = x[i] + b[i] * scale + *scalar * z[i];
        } else {
            problem.sigma.eval(t, x, sig);
            for (std::size_t i = 0; i < du; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < du; ++j) s += sig[i * du + j] * z[j];
                next[i] = x[i] + b[i] * scale + s;
            }
        }
        double r2 = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < du; ++i) {
            finite = finite && std::isfinite(next[i]);
            r2 += next[i] * next[i];
        }
        double* dst = states.data() + (k + 1) * du;
        if (!finite) {
            diag.status = PathStatus::NonFinite;
            diag.event_step = static_cast<std::uint32_t>(k + 1);
            std::copy(x.begin(), x.end(), dst);
            frozen = true;
            ++k;
            break;
        }
        std::copy(next.begin(), next.begin() + d, dst);
        if (std::sqrt(r2) > problem.blowup_bound) {
            diag.status = PathStatus::BlowUp;
            diag.event_step = static_cast<std::uint32_t>(k + 1);
            frozen = true;
            ++k;
            break;
        }
        if (opt.stop_on_exit && !opt.stop_on_exit->contains(t + dt, std::span<const double>(dst, du))) {
            diag.event_step = static_cast<std::uint32_t>(k + 1);
            frozen = true;
            ++k;
            break;
        }
    }
    if (frozen) {
        const double* last = states.data() + k * du;
        for (std::size_t j = k + 1; j <= n; ++j) std::copy(last, last + du, states.data() + j * du);
    }
}

std::size_t PathEnsemble::flagged() const {
    return static_cast<std::size_t>(
        std::count_if(diags.begin(), diags.end(), [](const PathDiag& g) { return g.status != PathStatus::Ok; }));
}

std::uint64_t PathEnsemble::cap_hits() const {
    std::uint64_t s = 0;
    for (const auto& g : diags) s += g.cap_hits;
    return s;
}

PathEnsemble simulate(const SdeProblem& problem, const SimOptions& opt) {
    opt.validate();
    problem.validate(opt.T);
    PathEnsemble ens;
    ens.d = static_cast<int>(problem.x0.size());
    ens.n_paths = opt.n_paths;
    ens.n_steps = opt.n_steps();
    ens.dt = opt.dt;
    ens.T = static_cast<double>(ens.n_steps) * opt.dt;
    ens.t0 = problem.t0;
    ens.seed = opt.seed;
    const std::size_t len = (ens.n_steps + 1) * static_cast<std::size_t>(ens.d);
    ens.states.resize(len * ens.n_paths);
    ens.diags.resize(ens.n_paths);
    parallel_for(ens.n_paths, opt.workers, [&](std::size_t i) {
        thread_local std::vector<double> buf;
        simulate_path(problem, opt, i, buf, ens.diags[i]);
        std::copy(buf.begin(), buf.end(), ens.states.begin() + static_cast<std::ptrdiff_t>(i * len));
    });
    return ens;
}

namespace {

constexpr char kMagic[8] = {'D', 'L', 'P', 'A', 'T', 'H', '0', '1'};

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) fail(ErrorKind::Io, "truncated ensemble file");
    return v;
}

}  // namespace

void save_ensemble(const PathEnsemble& ens, const std::string& base) {
    {
        std::ofstream out(base + ".bin", std::ios::binary);
        if (!out) fail(ErrorKind::Io, "cannot write " + base + ".bin");
        out.write(kMagic, sizeof kMagic);
        put(out, static_cast<std::int32_t>(ens.d));
        put(out, static_cast<std::uint64_t>(ens.n_paths));
        put(out, static_cast<std::uint64_t>(ens.n_steps));
        put(out, ens.dt);
        put(out, ens.T);
        put(out, ens.t0);
        put(out, ens.seed);
        char tag[32] = {};
        std::strncpy(tag, ens.scheme.c_str(), sizeof tag - 1);
        out.write(tag, sizeof tag);
        const std::size_t pts = ens.n_steps + 1;
        const std::size_t du = static_cast<std::size_t>(ens.d);
        std::vector<double> col(ens.n_paths * pts);
        for (std::size_t j = 0; j < du; ++j) {
            for (std::size_t i = 0; i < ens.n_paths; ++i)
                for (std::size_t k = 0; k < pts; ++k) col[i * pts + k] = ens.states[(i * pts + k) * du + j];
            out.write(reinterpret_cast<const char*>(col.data()), static_cast<std::streamsize>(col.size() * sizeof(double)));
        }
        for (const auto& g : ens.diags) {
            put(out, static_cast<std::uint8_t>(g.status));
            put(out, g.event_step);
            put(out, g.cap_hits);
            put(out, g.max_impulse);
        }
        if (!out) fail(ErrorKind::Io, "write failed for " + base + ".bin");
    }
    nlohmann::json m;
    m["format"] = "driftlab-paths";
    m["version"] = 1;
    m["binary"] = base.substr(base.find_last_of('/') + 1) + ".bin";
    m["layout"] = "columnar: one column per coordinate, path-major within a column";
    m["d"] = ens.d;
    m["n_paths"] = ens.n_paths;
    m["n_steps"] = ens.n_steps;
    m["dt"] = ens.dt;
    m["T"] = ens.T;
    m["t0"] = ens.t0;
    m["seed"] = ens.seed;
    m["scheme"] = ens.scheme;
    m["flagged_paths"] = ens.flagged();
    m["cap_hits"] = ens.cap_hits();
    std::ofstream js(base + ".json");
    if (!js) fail(ErrorKind::Io, "cannot write " + base + ".json");
    js << m.dump(2) << '\n';
}

PathEnsemble load_ensemble(const std::string& base) {
    std::ifstream in(base + ".bin", std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + base + ".bin");
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) fail(ErrorKind::Io, base + ".bin is not an ensemble file");
    PathEnsemble ens;
    ens.d = get<std::int32_t>(in);
    ens.n_paths = get<std::uint64_t>(in);
    ens.n_steps = get<std::uint64_t>(in);
    ens.dt = get<double>(in);
    ens.T = get<double>(in);
    ens.t0 = get<double>(in);
    ens.seed = get<std::uint64_t>(in);
    char tag[32];
    in.read(tag, sizeof tag);
    tag[31] = '\0';
    ens.scheme = tag;
    if (ens.d < 1 || ens.d > kMaxDim) fail(ErrorKind::Io, "bad dimension in ensemble header");
    const std::size_t pts = ens.n_steps + 1;
    const std::size_t du = static_cast<std::size_t>(ens.d);
    ens.states.resize(ens.n_paths * pts * du);
    std::vector<double> col(ens.n_paths * pts);
    for (std::size_t j = 0; j < du; ++j) {
        in.read(reinterpret_cast<char*>(col.data()), static_cast<std::streamsize>(col.size() * sizeof(double)));
        if (!in) fail(ErrorKind::Io, "truncated ensemble file");
        for (std::size_t i = 0; i < ens.n_paths; ++i)
            for (std::size_t k = 0; k < pts; ++k) ens.states[(i * pts + k) * du + j] = col[i * pts + k];
    }
    ens.diags.resize(ens.n_paths);
    for (auto& g : ens.diags) {
        g.status = static_cast<PathStatus>(get<std::uint8_t>(in));
        g.event_step = get<std::uint32_t>(in);
        g.cap_hits = get<std::uint64_t>(in);
        g.max_impulse = get<double>(in);
    }
    return ens;
}

void EnsembleSource::path(std::size_t i, std::vector<double>& states, PathDiag& diag) const {
    const auto p = ens_.path(i);
    states.assign(p.begin(), p.end());
    diag = ens_.diags[i];
}

LazySource::LazySource(SdeProblem problem, SimOptions opt) : problem_(std::move(problem)), opt_(std::move(opt)) {
    opt_.validate();
    problem_.validate(opt_.T);
}

void LazySource::path(std::size_t i, std::vector<double>& states, PathDiag& diag) const {
    simulate_path(problem_, opt_, i, states, diag);
}

std::vector<double> per_path(const PathSource& src, std::size_t k, int workers, const PathStatFn& fn,
                             std::vector<PathDiag>* diags) {
    const std::size_t n = src.n_paths();
    std::vector<double> out(n * k);
    std::vector<PathDiag> local(n);
    parallel_for(n, workers, [&](std::size_t i) {
        thread_local std::vector<double> buf;
        src.path(i, buf, local[i]);
        fn(i, buf, local[i], std::span<double>(out.data() + i * k, k));
    });
    if (diags) *diags = std::move(local);
    return out;
}

Estimate summarize(std::span<const double> values, std::span<const PathDiag> diags, std::size_t stride,
                   std::size_t column) {
    Estimate e;
    const std::size_t n = diags.size();
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diags[i].status != PathStatus::Ok) {
            ++e.excluded;
            continue;
        }
        const double v = values[i * stride + column];
        ++e.n;
        const double delta = v - mean;
        mean += delta / static_cast<double>(e.n);
        m2 += delta * (v - mean);
    }
    if (e.n < 30)
        fail(ErrorKind::DegenerateCI, "only " + std::to_string(e.n) + " contributing paths (need at least 30)");
    e.mean = mean;
    e.se = std::sqrt(m2 / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
    e.ci_lo = mean - 1.959963984540054 * e.se;
    e.ci_hi = mean + 1.959963984540054 * e.se;
    return e;
}

double exit_time_of_path(std::span<const double> states, int d, double t0, double dt, const ParabolicCylinder& c,
                         bool* censored) {
    const std::size_t du = static_cast<std::size_t>(d);
    const std::size_t pts = states.size() / du;
    const double cap = c.t1() - t0;
    if (censored) *censored = false;
    double r_prev = distance(states.subspan(0, du), c.center());
    for (std::size_t k = 1; k < pts; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (t >= cap) return cap;
        const double r = distance(states.subspan(k * du, du), c.center());
        if (r > c.rho()) {
            // Linear interpolation of the radial coordinate across the step.
            const double frac = r > r_prev ? std::clamp((c.rho() - r_prev) / (r - r_prev), 0.0, 1.0) : 1.0;
            return std::min(cap, t - dt + frac * dt);
        }
        r_prev = r;
    }
    const double horizon = static_cast<double>(pts - 1) * dt;
    if (horizon >= cap) return cap;
    if (censored) *censored = true;
    return horizon;
}

Estimate occupation_functional(const PathSource& src, const Field& f, const StopRule& stop, int workers) {
    if (!f.valid() || f.kind() != FieldKind::Scalar || f.dim() != src.dim())
        fail(ErrorKind::InvalidParams, "occupation functional needs a scalar field of the path dimension");
    const int d = src.dim();
    const std::size_t du = static_cast<std::size_t>(d);
    const double dt = src.dt();
    const double t0 = src.t0();
    std::vector<PathDiag> diags;
    const auto vals = per_path(
        src, 1, workers,
        [&](std::size_t, std::span<const double> s, const PathDiag&, std::span<double> out) {
            const std::size_t steps = s.size() / du - 1;
            double limit = static_cast<double>(steps) * dt;
            if (stop.exit) limit = exit_time_of_path(s, d, t0, dt, *stop.exit);
            double acc = 0.0;
            for (std::size_t k = 0; k < steps; ++k) {
                const double tk = static_cast<double>(k) * dt;
                if (tk >= limit) break;
                const double w = std::min(dt, limit - tk);
                acc += w * f.value(t0 + tk, s.subspan(k * du, du));
            }
            out[0] = acc;
        },
        &diags);
    return summarize(vals, diags);
}

ExitTimes first_exit(const PathSource& src, const ParabolicCylinder& c, int workers) {
    if (c.dim() != src.dim()) fail(ErrorKind::InvalidParams, "cylinder dimension does not match the paths");
    ExitTimes out;
    const auto vals = per_path(
        src, 2, workers,
        [&](std::size_t, std::span<const double> s, const PathDiag&, std::span<double> o) {
            bool cens = false;
            o[0] = exit_time_of_path(s, src.dim(), src.t0(), src.dt(), c, &cens);
            o[1] = cens ? 1.0 : 0.0;
        },
        &out.diags);
    const std::size_t n = src.n_paths();
    out.tau.resize(n);
    out.censored.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.tau[i] = vals[2 * i];
        out.censored[i] = vals[2 * i + 1] != 0.0;
    }
    return out;
}

Estimate modulus_moment(const PathSource& src, double n, double s, double r, int workers) {
    if (!(n >= 1.0)) fail(ErrorKind::InvalidParams, "moment order must be at least 1");
    const double horizon = static_cast<double>(src.n_steps()) * src.dt();
    if (!(s >= src.t0() && s <= r && r <= src.t0() + horizon + 1e-12))
        fail(ErrorKind::InvalidParams, "need t0 <= s <= r <= t0 + T");
    const std::size_t du = static_cast<std::size_t>(src.dim());
    const auto ks = static_cast<std::size_t>(std::llround((s - src.t0()) / src.dt()));
    const auto kr = std::min(src.n_steps(), static_cast<std::size_t>(std::floor((r - src.t0()) / src.dt() + 1e-9)));
    std::vector<PathDiag> diags;
    const auto vals = per_path(
        src, 1, workers,
        [&](std::size_t, std::span<const double> st, const PathDiag&, std::span<double> out) {
            double best = 0.0;
            const auto xs = st.subspan(ks * du, du);
            for (std::size_t k = ks + 1; k <= kr; ++k) best = std::max(best, distance(st.subspan(k * du, du), xs));
            out[0] = std::pow(best, n);
        },
        &diags);
    return summarize(vals, diags);
}

}  // namespace driftlab
