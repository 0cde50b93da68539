#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace driftlab {

using Point = std::vector<double>;

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
    return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

/// Surface measure of the unit sphere S^{d-1} in R^d.
inline double unit_sphere_area(int d) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return std::sqrt(s);
}

inline double norm2(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

/// Forward parabolic cylinder [t0, t0 + rho^2] x closed ball B_rho(center).
class ParabolicCylinder {
public:
    /// Throws EmptyCylinder when rho <= 0 or the center is empty.
    ParabolicCylinder(double t0, Point center, double rho);

    double t0() const noexcept { return t0_; }
    double t1() const noexcept { return t0_ + rho_ * rho_; }
    double rho() const noexcept { return rho_; }
    int dim() const noexcept { return static_cast<int>(center_.size()); }
    const Point& center() const noexcept { return center_; }

    double time_extent() const noexcept { return rho_ * rho_; }
    double ball_volume() const { return unit_ball_volume(dim()) * std::pow(rho_, dim()); }
    double volume() const { return time_extent() * ball_volume(); }

    bool contains(double t, std::span<const double> x) const {
        return t >= t0_ && t <= t1() && distance(x, center_) <= rho_;
    }

private:
    double t0_;
    Point center_;
    double rho_;
};

}  // namespace driftlab
