#include "driftlab/grid_field.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

constexpr char kMagic[8] = {'D', 'L', 'G', 'R', 'I', 'D', '0', '1'};

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) fail(ErrorKind::Io, "truncated grid file");
    return v;
}

}  // namespace

std::size_t GridData::node_count() const {
    std::size_t n = 1;
    for (auto c : counts) n *= static_cast<std::size_t>(c);
    return n;
}

void GridData::validate() const {
    if (d < 1 || d > kMaxDim) fail(ErrorKind::InvalidParams, "grid dimension out of range");
    if (components != 1 && components != d) fail(ErrorKind::InvalidParams, "grid components must be 1 or d");
    const std::size_t axes = static_cast<std::size_t>(d) + 1;
    if (counts.size() != axes || origin.size() != axes || spacing.size() != axes)
        fail(ErrorKind::InvalidParams, "grid header needs d + 1 counts, origins and spacings");
    for (std::size_t k = 0; k < axes; ++k) {
        if (counts[k] < 1) fail(ErrorKind::InvalidParams, "grid counts must be positive");
        if (counts[k] > 1 && !(spacing[k] > 0.0)) fail(ErrorKind::InvalidParams, "grid spacing must be positive");
    }
    if (!values.empty() && values.size() != node_count() * static_cast<std::size_t>(components))
        fail(ErrorKind::InvalidParams, "grid value count does not match header");
}

GridData sample_field(const Field& f, GridData g) {
    g.d = f.dim();
    g.components = f.components();
    g.values.clear();
    g.validate();
    const std::size_t axes = static_cast<std::size_t>(g.d) + 1;
    const std::size_t n = g.node_count();
    g.values.resize(n * static_cast<std::size_t>(g.components));
    std::vector<std::int64_t> idx(axes, 0);
    Point x(static_cast<std::size_t>(g.d));
    for (std::size_t lin = 0; lin < n; ++lin) {
        const double t = g.origin[0] + g.spacing[0] * static_cast<double>(idx[0]);
        for (int i = 0; i < g.d; ++i) x[i] = g.origin[i + 1] + g.spacing[i + 1] * static_cast<double>(idx[i + 1]);
        f.eval(t, x, std::span<double>(g.values.data() + lin * g.components, static_cast<std::size_t>(g.components)));
        for (std::size_t k = axes; k-- > 0;) {
            if (++idx[k] < g.counts[k]) break;
            idx[k] = 0;
        }
    }
    return g;
}

void write_grid_text(const GridData& g, const std::string& path) {
    g.validate();
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Io, "cannot open " + path);
    os.precision(17);
    os << "grid driftlab 1\n";
    os << "dims " << g.d << ' ' << g.components << '\n';
    os << "counts";
    for (auto c : g.counts) os << ' ' << c;
    os << "\norigin";
    for (double v : g.origin) os << ' ' << v;
    os << "\nspacing";
    for (double v : g.spacing) os << ' ' << v;
    os << "\nvalues\n";
    for (std::size_t i = 0; i < g.values.size(); ++i) os << g.values[i] << ((i + 1) % g.components == 0 ? '\n' : ' ');
    if (!os) fail(ErrorKind::Io, "write failed for " + path);
}

void write_grid_binary(const GridData& g, const std::string& path) {
    g.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::Io, "cannot open " + path);
    os.write(kMagic, sizeof kMagic);
    put<std::int32_t>(os, g.d);
    put<std::int32_t>(os, g.components);
    for (auto c : g.counts) put<std::int64_t>(os, c);
    for (double v : g.origin) put(os, v);
    for (double v : g.spacing) put(os, v);
    os.write(reinterpret_cast<const char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(double)));
    if (!os) fail(ErrorKind::Io, "write failed for " + path);
}

GridData read_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::Io, "cannot open " + path);
    char head[8] = {};
    is.read(head, sizeof head);
    GridData g;
    if (is && std::memcmp(head, kMagic, sizeof kMagic) == 0) {
        g.d = get<std::int32_t>(is);
        g.components = get<std::int32_t>(is);
        if (g.d < 1 || g.d > kMaxDim) fail(ErrorKind::Io, "corrupt grid header");
        const std::size_t axes = static_cast<std::size_t>(g.d) + 1;
        for (std::size_t k = 0; k < axes; ++k) g.counts.push_back(get<std::int64_t>(is));
        for (std::size_t k = 0; k < axes; ++k) g.origin.push_back(get<double>(is));
        for (std::size_t k = 0; k < axes; ++k) g.spacing.push_back(get<double>(is));
        g.validate();
        g.values.resize(g.node_count() * static_cast<std::size_t>(g.components));
        is.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(double)));
        if (!is) fail(ErrorKind::Io, "truncated grid values in " + path);
        return g;
    }

    is.clear();
    is.seekg(0);
    std::string line;
    bool in_values = false;
    while (!in_values && std::getline(is, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key[0] == '#') continue;
        if (key == "grid") continue;
        if (key == "dims") {
            ls >> g.d >> g.components;
        } else if (key == "counts") {
            std::int64_t c;
            while (ls >> c) g.counts.push_back(c);
        } else if (key == "origin") {
            double v;
            while (ls >> v) g.origin.push_back(v);
        } else if (key == "spacing") {
            double v;
            while (ls >> v) g.spacing.push_back(v);
        } else if (key == "values") {
            in_values = true;
        } else {
            fail(ErrorKind::Io, "unknown grid header key '" + key + "' in " + path);
        }
    }
    if (!in_values) fail(ErrorKind::Io, "grid file has no values section: " + path);
    g.validate();
    const std::size_t want = g.node_count() * static_cast<std::size_t>(g.components);
    g.values.reserve(want);
    double v;
    while (g.values.size() < want && is >> v) g.values.push_back(v);
    if (g.values.size() != want) fail(ErrorKind::Io, "grid file has too few values: " + path);
    return g;
}

Field grid_to_field(const GridData& g_in, std::string label) {
    g_in.validate();
    if (g_in.values.empty()) fail(ErrorKind::InvalidParams, "grid has no values");
    auto g = std::make_shared<const GridData>(g_in);
    const int d = g->d;
    const int nc = g->components;
    const std::size_t axes = static_cast<std::size_t>(d) + 1;

    std::vector<std::size_t> stride(axes);
    std::size_t s = static_cast<std::size_t>(nc);
    for (std::size_t k = axes; k-- > 0;) {
        stride[k] = s;
        s *= static_cast<std::size_t>(g->counts[k]);
    }

    auto interp = [g, stride, axes, nc](double t, std::span<const double> x, std::span<double> out) {
        std::array<std::int64_t, kMaxDim + 1> lo{};
        std::array<double, kMaxDim + 1> frac{};
        for (int c = 0; c < nc; ++c) out[c] = 0.0;
        for (std::size_t k = 0; k < axes; ++k) {
            const double coord = k == 0 ? t : x[k - 1];
            const std::int64_t n = g->counts[k];
            if (n == 1) {
                lo[k] = 0;
                frac[k] = 0.0;
                continue;
            }
            const double u = (coord - g->origin[k]) / g->spacing[k];
            if (!(u >= 0.0 && u <= static_cast<double>(n - 1))) return;
            std::int64_t i = static_cast<std::int64_t>(std::floor(u));
            if (i >= n - 1) i = n - 2;
            lo[k] = i;
            frac[k] = u - static_cast<double>(i);
        }
        const std::size_t corners = std::size_t{1} << axes;
        for (std::size_t m = 0; m < corners; ++m) {
            double w = 1.0;
            std::size_t off = 0;
            for (std::size_t k = 0; k < axes; ++k) {
                const bool up = (m >> k) & 1U;
                if (up && g->counts[k] == 1) {
                    w = 0.0;
                    break;
                }
                w *= up ? frac[k] : 1.0 - frac[k];
                off += static_cast<std::size_t>(lo[k] + (up ? 1 : 0)) * stride[k];
            }
            if (w == 0.0) continue;
            for (int c = 0; c < nc; ++c) out[c] += w * g->values[off + static_cast<std::size_t>(c)];
        }
    };

    FieldTraits traits;
    traits.label = std::move(label);
    traits.time_independent = g->counts[0] == 1;
    if (!traits.time_independent) {
        traits.support.t_lo = g->origin[0];
        traits.support.t_hi = g->origin[0] + g->spacing[0] * static_cast<double>(g->counts[0] - 1);
    }
    Point center(static_cast<std::size_t>(d));
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
        const double half = 0.5 * g->spacing[i + 1] * static_cast<double>(g->counts[i + 1] - 1);
        center[i] = g->origin[i + 1] + half;
        r2 += half * half;
    }
    traits.support.center = center;
    traits.support.radius = std::sqrt(r2);

    if (nc == 1) {
        return Field::scalar(
            d,
            [interp](double t, std::span<const double> x) {
                double v = 0.0;
                interp(t, x, std::span<double>(&v, 1));
                return v;
            },
            std::move(traits));
    }
    return Field::vector(d, std::move(interp), std::move(traits));
}

}  // namespace driftlab
