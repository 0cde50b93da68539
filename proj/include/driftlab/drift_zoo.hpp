#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftlab/cylinder.hpp"
#include "driftlab/field.hpp"
#include "driftlab/norm_spec.hpp"

namespace driftlab {

enum class ZooKind { DriftVector, TestScalar };

std::string to_string(ZooKind k);

struct ParamInfo {
    std::string name;
    double default_value;
    std::string doc;
};

struct ZooEntry {
    std::string name;
    ZooKind kind;
    std::string formula;
    std::string citation;
    std::vector<ParamInfo> params;
};

/// Registry key plus named scalar parameters. Missing parameters take their defaults;
/// the key "d" (0 = use GlobalParams::d) is accepted by every entry.
struct DriftSpec {
    std::string name;
    std::map<std::string, double> params;
};

const std::vector<ZooEntry>& zoo_registry();
/// Throws UnknownSpec.
const ZooEntry& zoo_entry(const std::string& name);
/// Defaults filled in, unknown keys and invalid values rejected (InvalidParams).
std::map<std::string, double> resolve_params(const DriftSpec& spec);
int resolve_dim(const DriftSpec& spec, const GlobalParams& params);

Field make_field(const DriftSpec& spec, const GlobalParams& params);

/// Fields of the form amp * |x|^-a I{|x| <= r_cut} * t^-gamma I{t_lo < t < t_hi}.
/// gamma = 0 with infinite window means time independent.
struct SeparablePower {
    int d = 1;
    double amp = 1.0;
    double a = 0.0;
    double r_cut = kInf;
    double gamma = 0.0;
    double t_lo = -kInf;
    double t_hi = kInf;
};

/// Separable closed form of a registry entry, if it has one.
std::optional<SeparablePower> separable_form(const DriftSpec& spec, const GlobalParams& params);

/// integral over B_r(x0) intersected with B_{r_cut}(0) of |x|^-e dx, where |x0| = c.
/// Returns +inf when the origin lies in the closed domain and e >= d.
double radial_power_integral(int d, double c, double r, double e, double r_cut = kInf);

/// Exact L_{p,q} norm of a separable power field on a cylinder (reduced to
/// one-dimensional integrals). Empty optional for infinite exponents.
std::optional<double> separable_power_norm(const SeparablePower& f, const ParabolicCylinder& c, const NormSpec& spec);

/// Closed-form oracle for registry entries; empty when none is registered.
std::optional<double> analytic_norm_oracle(const DriftSpec& spec, const ParabolicCylinder& c, const NormSpec& norm,
                                           const GlobalParams& params);

}  // namespace driftlab
