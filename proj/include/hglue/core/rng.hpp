#pragma once

// Counter-based Gaussian streams. Every draw is a pure function of
// (master seed, n, b, stage, block), so draw order never matters.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "hglue/core/error.hpp"

namespace hglue {

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

/// Philox4x32 with 10 rounds.
constexpr Counter philox4x32(Counter c, Key k) {
    for (int r = 0; r < 10; ++r) {
        c = round(c, k);
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

} // namespace philox

/// Stage offsets for the draws made inside one step, relative to the step's
/// base stage. Drivers that repeat sites (lattice macro-iterations) fold the
/// generation into the base with compose().
namespace stage {
inline constexpr std::uint32_t step = 0;       // em / heun / underdamped / strang first half
inline constexpr std::uint32_t strang_mid = 1;
inline constexpr std::uint32_t strang_last = 2;
inline constexpr std::uint32_t anchor = 3;
inline constexpr std::uint32_t accept = 4;     // MH uniform
inline constexpr std::uint32_t swap = 5;       // replica exchange uniform
inline constexpr std::uint32_t init = 6;       // initial condition
inline constexpr std::uint32_t per_generation = 8;

/// Stage label for local stage `local` during macro-iteration `generation`.
constexpr std::uint32_t compose(std::uint64_t generation, std::uint32_t local) {
    return static_cast<std::uint32_t>(generation * per_generation + local);
}
} // namespace stage

class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, RngSite site) : seed_(seed), site_(site) {}
    RngStream(std::uint64_t seed, std::uint32_t n, std::uint32_t b, std::uint32_t st)
        : seed_(seed), site_{n, b, st} {}

    std::uint64_t seed() const noexcept { return seed_; }
    const RngSite& site() const noexcept { return site_; }

    RngStream with_stage(std::uint32_t st) const { return {seed_, site_.n, site_.b, st}; }
    RngStream offset(std::uint32_t k) const { return with_stage(site_.stage + k); }

    /// Raw 128-bit block `block` of this site.
    philox::Counter block(std::uint32_t block) const {
        const philox::Key key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
        return philox::philox4x32({site_.n, site_.b, site_.stage, block}, key);
    }

    /// Two independent uniforms in (0, 1) with 53-bit resolution.
    std::array<double, 2> uniform_pair(std::uint32_t blk) const {
        const auto w = block(blk);
        return {to_unit(w[0], w[1]), to_unit(w[2], w[3])};
    }

    double uniform() const { return uniform_pair(0)[0]; }

    /// Standard normals into `out`; entry i depends only on (seed, site, i).
    void fill_gaussian(std::span<double> out) const {
        const std::size_t dim = out.size();
        for (std::size_t i = 0; i < dim; i += 2) {
            const auto [u1, u2] = uniform_pair(static_cast<std::uint32_t>(i / 2));
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double a = 2.0 * std::numbers::pi * u2;
            out[i] = r * std::cos(a);
            if (i + 1 < dim) out[i + 1] = r * std::sin(a);
        }
    }

private:
    static double to_unit(std::uint32_t a, std::uint32_t b) {
        const std::uint64_t bits = (std::uint64_t{a >> 5} << 26) | (b >> 6);
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t seed_ = 0;
    RngSite site_{};
};

/// Standard normal vector of length `dim`, reproducible per site.
inline std::vector<double> gaussian_draw(const RngStream& stream, std::size_t dim) {
    if (dim < 1) throw DomainError("gaussian_draw: dim must be >= 1");
    std::vector<double> out(dim);
    stream.fill_gaussian(out);
    return out;
}

} // namespace hglue
