#pragma once

// Harmonic couplings between trajectory slices.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "hglue/core/error.hpp"
#include "hglue/core/rng.hpp"
#include "hglue/core/tolerances.hpp"
#include "hglue/core/units.hpp"
#include "hglue/geometry.hpp"
#include "hglue/integrators.hpp"
#include "hglue/potentials.hpp"

namespace hglue {

enum class GlueKind { adjacent, anchored, radial_rmin };
enum class DistanceMode { per_frame, pairwise };

struct GlueSpec {
    GlueKind kind = GlueKind::adjacent;
    std::optional<double> stiffness;   // unset: stiffness_for_step(dt)
    double anchor_stiffness = 1.0;     // k_a
    double r_min = 1.0;
    int neighbors = 1;                 // S
    double rho = 0.6;
    double eps = tol::glue_eps;
    bool align = false;
    DistanceMode distance_mode = DistanceMode::per_frame;

    double spring(double dt, const Units& units) const {
        return stiffness ? *stiffness : stiffness_for_step(dt, units);
    }

    void validate() const {
        if (stiffness && !(*stiffness >= 0.0)) throw DomainError("glue: stiffness must be >= 0");
        if (kind == GlueKind::anchored && !(anchor_stiffness > 0.0))
            throw DomainError("glue: anchor stiffness must be > 0");
        if (kind == GlueKind::radial_rmin) {
            if (!(r_min > 0.0)) throw DomainError("glue: r_min must be > 0");
            if (!(eps > 0.0)) throw DomainError("glue: eps must be > 0");
            if (neighbors < 1) throw DomainError("glue: neighbor count must be >= 1");
            if (!(rho > 0.0 && rho < 1.0)) throw DomainError("glue: rho must lie in (0, 1)");
        }
    }
};

/// g(x) + k (x - a): gradient of V(x) + (k/2)||x - a||^2 with g standing in for grad V.
inline Vector glued_score(std::span<const double> x, std::span<const double> a, double k, const DriftProvider& g) {
    if (x.size() != a.size()) throw DomainError("glued_score: x and a differ in length");
    Vector out = g.gradient(x);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += k * (x[i] - a[i]);
    return out;
}

namespace detail {

inline Vector glued_update(std::span<const double> x, std::span<const double> a, double k, double dt,
                           const DriftProvider& g, const Units& units, std::span<const double> xi,
                           const std::optional<RngSite>& site) {
    require_step(dt);
    const Vector s = glued_score(x, a, k, g);
    if (!all_finite(s)) throw StepError("non-finite drift", site);
    const double sigma = std::sqrt(2.0 * units.diffusion * dt);
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - s[i] * dt + sigma * xi[i];
    return out;
}

} // namespace detail

// --- adjacent-batch glue --------------------------------------------------------

/// x - (g(x) + k (x - x_prev)) dt + sqrt(2 D dt) xi, k = stiffness_for_step(dt) by default.
/// Pass x_prev = x for the first slice.
inline Vector adjacent_glue_update(std::span<const double> x_prev, std::span<const double> x, double dt,
                                   const DriftProvider& g, const Units& units, std::span<const double> xi,
                                   std::optional<double> stiffness = std::nullopt,
                                   std::optional<RngSite> site = std::nullopt) {
    detail::require_step(dt);
    const double k = stiffness ? *stiffness : stiffness_for_step(dt, units);
    return detail::glued_update(x, x_prev, k, dt, g, units, xi, site);
}

inline Vector adjacent_glue_step(std::span<const double> x_prev, std::span<const double> x, double dt,
                                 const DriftProvider& g, const Units& units, const RngStream& stream,
                                 std::optional<double> stiffness = std::nullopt) {
    const Vector xi = gaussian_draw(stream, x.size());
    return adjacent_glue_update(x_prev, x, dt, g, units, xi, stiffness, stream.site());
}

/// Mean of the adjacent-glue transition.
inline Vector adjacent_glue_mean(std::span<const double> x_prev, std::span<const double> x, double dt,
                                 const DriftProvider& g, double k) {
    const Vector s = glued_score(x, x_prev, k, g);
    Vector m(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) m[i] = x[i] - s[i] * dt;
    return m;
}

// --- Gibbs-anchored glue -----------------------------------------------------------

/// A ~ N(x, 1/(beta k_a)) from `anchor_stream`, then a glued EM step toward A.
inline Vector anchored_glue_step(std::span<const double> x, double dt, const DriftProvider& g, double k_a,
                                 const Units& units, const RngStream& anchor_stream,
                                 const RngStream& step_stream, Vector* anchor_out = nullptr) {
    detail::require_step(dt);
    if (!(k_a > 0.0)) throw DomainError("anchored_glue_step: k_a must be > 0");
    const Vector eta = gaussian_draw(anchor_stream, x.size());
    const double sd = 1.0 / std::sqrt(units.beta * k_a);
    Vector a(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i] + sd * eta[i];
    const Vector xi = gaussian_draw(step_stream, x.size());
    Vector out = detail::glued_update(x, a, k_a, dt, g, units, xi, step_stream.site());
    if (anchor_out) *anchor_out = std::move(a);
    return out;
}

// --- variance tempering --------------------------------------------------------------

/// Harmonic kernel with covariance 2 D dt upsilon I; the mean is unchanged.
inline Vector tempered_kernel_update(std::span<const double> x, double dt, double upsilon, const DriftProvider& g,
                                     const Units& units, std::span<const double> xi,
                                     std::optional<RngSite> site = std::nullopt) {
    if (!(upsilon > 0.0)) throw DomainError("tempered_kernel_step: upsilon must be > 0");
    if (upsilon == 1.0) return harmonic_kernel_update(x, dt, g, units, xi, site);
    detail::require_step(dt);
    const Vector gx = detail::checked_gradient(g, x, site);
    const double shift = units.diffusion * dt;
    const double sigma = std::sqrt(2.0 * units.diffusion * dt * upsilon);
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - shift * gx[i] + sigma * xi[i];
    return out;
}

inline Vector tempered_kernel_step(std::span<const double> x, double dt, double upsilon, const DriftProvider& g,
                                   const Units& units, const RngStream& stream) {
    const Vector xi = gaussian_draw(stream, x.size());
    return tempered_kernel_update(x, dt, upsilon, g, units, xi, stream.site());
}

/// T_n = upsilon_n T.
inline double effective_temperature(double upsilon, double temperature) {
    if (!(upsilon > 0.0)) throw DomainError("effective_temperature: upsilon must be > 0");
    return upsilon * temperature;
}

/// Spring of the tempered kernel: k / upsilon.
inline double effective_stiffness(double dt, double upsilon, const Units& units) {
    if (!(upsilon > 0.0)) throw DomainError("effective_stiffness: upsilon must be > 0");
    return stiffness_for_step(dt, units) / upsilon;
}

// --- radial r_min glue -------------------------------------------------------------------

/// Time-ordered stack of frames, each N x 3 flattened.
using FrameStack = std::vector<Vector>;

namespace detail {

inline void check_stack(const FrameStack& frames) {
    if (frames.size() < 2) throw DomainError("Need at least two frames (T >= 2)");
    const std::size_t len = frames.front().size();
    atom_count(frames.front());
    for (const auto& f : frames)
        if (f.size() != len) throw DomainError("radial glue: frames differ in shape");
}

/// Frames used for the temporal differences: raw, or centered and Kabsch-aligned to frame 0.
inline FrameStack prepared_frames(const FrameStack& frames, bool align) {
    if (!align) return frames;
    FrameStack out;
    out.reserve(frames.size());
    const Points ref = to_points(frames.front());
    for (const auto& f : frames) out.push_back(to_vector(kabsch_align(ref, to_points(f)).aligned));
    return out;
}

} // namespace detail

/// Per-frame scalar distance d_t: RMSD from frame t to t+1 (the last frame
/// uses t-1), after Kabsch alignment when `align` is set, plus eps.
inline Vector per_frame_distances(const FrameStack& frames, bool align, double eps) {
    detail::check_stack(frames);
    const std::size_t t_count = frames.size();
    Vector d(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        const std::size_t other = t + 1 < t_count ? t + 1 : t - 1;
        d[t] = (align ? kabsch_align(frames[t], frames[other]).rmsd : rmsd(frames[t], frames[other])) + eps;
    }
    return d;
}

namespace detail {

/// sum_s rho^(s-1) c_{t,s} (X_t - X_{t+s}) / N, added to t and subtracted from t+s.
template <class Coefficient>
FrameStack accumulate_pairs(const FrameStack& xs, int neighbors, double rho, Coefficient coef) {
    const std::size_t t_count = xs.size();
    const std::size_t len = xs.front().size();
    const double inv_n = 1.0 / static_cast<double>(len / 3);
    FrameStack out(t_count, Vector(len, 0.0));
    double weight = 1.0;
    for (int s = 1; s <= neighbors; ++s, weight *= rho) {
        const auto shift = static_cast<std::size_t>(s);
        if (shift >= t_count) break;
        for (std::size_t t = 0; t + shift < t_count; ++t) {
            const double c = weight * coef(t, shift) * inv_n;
            const Vector& a = xs[t];
            const Vector& b = xs[t + shift];
            for (std::size_t i = 0; i < len; ++i) {
                const double contrib = c * (a[i] - b[i]);
                out[t][i] += contrib;
                out[t + shift][i] -= contrib;
            }
        }
    }
    return out;
}

inline double pair_msd(const Vector& a, const Vector& b) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    return sq / static_cast<double>(a.size() / 3);
}

} // namespace detail

/// Temporal adapter stack.
///
/// per_frame: f_t = -k (d_t - r_min), contributions rho^(s-1) f_t (X_t - X_{t+s}) / N
///   added to slice t and subtracted from slice t+s.
/// pairwise: the force -grad U_glue with r_{t,s} = sqrt(msd + eps^2).
///
/// The returned stack is a force (descent direction) in the coordinates of the
/// prepared frames; it sums to zero over slices in both modes.
inline FrameStack radial_glue_forces(const FrameStack& frames, const GlueSpec& spec, double k) {
    detail::check_stack(frames);
    spec.validate();
    const FrameStack xs = detail::prepared_frames(frames, spec.align);

    if (spec.distance_mode == DistanceMode::per_frame) {
        const Vector d = per_frame_distances(frames, spec.align, spec.eps);
        Vector f(d.size());
        for (std::size_t t = 0; t < d.size(); ++t) f[t] = -k * (d[t] - spec.r_min);
        return detail::accumulate_pairs(xs, spec.neighbors, spec.rho,
                                        [&](std::size_t t, std::size_t) { return f[t]; });
    }
    const double eps2 = spec.eps * spec.eps;
    return detail::accumulate_pairs(xs, spec.neighbors, spec.rho, [&](std::size_t t, std::size_t s) {
        const double r = std::sqrt(detail::pair_msd(xs[t], xs[t + s]) + eps2);
        return -k * (r - spec.r_min) / r;
    });
}

/// U_glue = (k/2) sum_t sum_s rho^(s-1) (r_{t,s} - r_min)^2 on the prepared frames.
inline double radial_glue_energy(const FrameStack& frames, const GlueSpec& spec, double k) {
    detail::check_stack(frames);
    const FrameStack xs = detail::prepared_frames(frames, spec.align);
    const double eps2 = spec.eps * spec.eps;
    double u = 0.0, weight = 1.0;
    for (int s = 1; s <= spec.neighbors; ++s, weight *= spec.rho) {
        const auto shift = static_cast<std::size_t>(s);
        for (std::size_t t = 0; t + shift < xs.size(); ++t) {
            const double r = std::sqrt(detail::pair_msd(xs[t], xs[t + shift]) + eps2);
            u += 0.5 * k * weight * (r - spec.r_min) * (r - spec.r_min);
        }
    }
    return u;
}

/// Energy whose negative gradient is the per-frame stack when the scalars d_t
/// are held fixed: (k/2) sum rho^(s-1) (d_t - r_min) msd(X_t, X_{t+s}).
inline double frozen_distance_energy(const FrameStack& frames, const Vector& d, const GlueSpec& spec, double k) {
    detail::check_stack(frames);
    if (d.size() != frames.size()) throw DomainError("frozen_distance_energy: one scalar per frame required");
    double u = 0.0, weight = 1.0;
    for (int s = 1; s <= spec.neighbors; ++s, weight *= spec.rho) {
        const auto shift = static_cast<std::size_t>(s);
        for (std::size_t t = 0; t + shift < frames.size(); ++t)
            u += 0.5 * k * weight * (d[t] - spec.r_min) * detail::pair_msd(frames[t], frames[t + shift]);
    }
    return u;
}

} // namespace hglue
