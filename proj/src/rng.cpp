#include "driftlab/rng.hpp"

#include <cmath>

#include <boost/math/special_functions/erf.hpp>

namespace driftlab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

PathRng::PathRng(std::uint64_t seed, std::uint64_t path) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, path_(path) {}

void PathRng::seek(std::uint64_t j) noexcept {
    // Two uniforms per block, each built from two 32-bit words.
    block_ = j / 2;
    used_ = 4;
    if (j % 2 == 1) {
        uniform();
    }
}

double PathRng::uniform() noexcept {
    if (used_ >= 4) {
        buf_ = philox4x32({static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32),
                           static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32)},
                          key_);
        ++block_;
        used_ = 0;
    }
    const std::uint64_t a = buf_[used_] >> 5;  // 27 bits
    const std::uint64_t b = buf_[used_ + 1] >> 6;  // 26 bits
    used_ += 2;
    return (static_cast<double>((a << 26) | b) + 0.5) * 0x1.0p-53;
}

double normal_quantile(double u) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u); }

double PathRng::normal() { return normal_quantile(uniform()); }

}  // namespace driftlab
