#pragma once

#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftlab/cylinder.hpp"

namespace driftlab {

inline constexpr int kMaxDim = 8;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class FieldKind { Scalar, Vector };

/// Declared singular loci. `axes` are spatial points p whose time line {x = p}
/// is singular; `times` are hyperplanes {t = s}.
struct SingularSet {
    std::vector<Point> axes;
    std::vector<double> times;

    bool empty() const noexcept { return axes.empty() && times.empty(); }
};

/// The field vanishes outside [t_lo, t_hi] x closed ball B_radius(center).
/// Infinite bounds mean no restriction in that direction.
struct SupportHint {
    double t_lo = -kInf;
    double t_hi = kInf;
    Point center;
    double radius = kInf;

    bool bounded_time() const noexcept { return t_lo > -kInf && t_hi < kInf; }
    bool bounded_space() const noexcept { return radius < kInf && !center.empty(); }
};

/// Scalar fields of the form profile(t, |x - center|), or vector fields
/// profile(t, r) (x - center) / r.
struct RadialForm {
    Point center;
    std::function<double(double t, double r)> profile;
};

/// Vector fields of the form profile(t) * direction.
struct TimeForm {
    Point direction;
    std::function<double(double t)> profile;
};

struct FieldTraits {
    SingularSet singular;
    SupportHint support;
    bool time_independent = false;
    std::optional<RadialForm> radial;
    std::optional<TimeForm> temporal;
    std::string label;
};

using ScalarFn = std::function<double(double t, std::span<const double> x)>;
using VectorFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

class Field;

/// An immutable, cheaply copyable space-time field on R x R^d.
class Field {
public:
    Field() = default;

    static Field scalar(int d, ScalarFn fn, FieldTraits traits);
    static Field vector(int d, VectorFn fn, FieldTraits traits);
    /// Builds the evaluator from `form`; traits.radial is overwritten.
    static Field radial(FieldKind kind, int d, RadialForm form, FieldTraits traits);
    /// Vector field profile(t) * direction; traits.temporal is overwritten.
    static Field temporal(int d, TimeForm form, FieldTraits traits);
    /// Pointwise sum; remembers its terms so linear operations can distribute.
    static Field sum(std::vector<Field> terms);

    bool valid() const noexcept { return impl_ != nullptr; }
    FieldKind kind() const { return impl_->kind; }
    int dim() const { return impl_->dim; }
    int components() const { return impl_->kind == FieldKind::Scalar ? 1 : impl_->dim; }

    const FieldTraits& traits() const { return impl_->traits; }
    const SingularSet& singular() const { return impl_->traits.singular; }
    const SupportHint& support() const { return impl_->traits.support; }
    bool time_independent() const { return impl_->traits.time_independent; }
    const std::string& label() const { return impl_->traits.label; }
    const std::vector<Field>& terms() const { return impl_->terms; }

    /// Writes `components()` values into `out`.
    void eval(double t, std::span<const double> x, std::span<double> out) const;
    /// Scalar value (scalar fields) or first component.
    double value(double t, std::span<const double> x) const;
    /// |f| for scalars, Euclidean |b| for vectors.
    double magnitude(double t, std::span<const double> x) const;

    bool in_support(double t, std::span<const double> x) const;

private:
    struct Impl {
        FieldKind kind = FieldKind::Scalar;
        int dim = 0;
        VectorFn fn;
        std::function<double(double, std::span<const double>)> mag;
        FieldTraits traits;
        std::vector<Field> terms;
    };
    std::shared_ptr<const Impl> impl_;
};

/// c * f.
Field scaled(const Field& f, double c);
/// f - g (both of the same kind and dimension).
Field difference(const Field& f, const Field& g);
/// f * I_C.
Field restricted(const Field& f, const ParabolicCylinder& c);
/// Pointwise product of f with a scalar weight field; singular set and support of f kept.
Field weighted(const Field& f, const Field& weight, std::string label);
/// Scalar field |f|.
Field magnitude_field(const Field& f);

}  // namespace driftlab
