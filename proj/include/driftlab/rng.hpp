#pragma once

#include <array>
#include <cstdint>

namespace driftlab {

/// Philox4x32-10 block function (Salmon et al.): a keyed bijection on 128-bit counters.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Counter-based stream for one path: key = seed, counter = (path, block).
/// Draw j of path i is a pure function of (seed, i, j).
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path) noexcept;

    /// Uniform in the open interval (0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Standard normal by inversion of the uniform.
    double normal();

    /// Repositions the stream at draw index j.
    void seek(std::uint64_t j) noexcept;

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t path_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int used_ = 4;
};

/// Standard normal quantile.
double normal_quantile(double u);

}  // namespace driftlab
