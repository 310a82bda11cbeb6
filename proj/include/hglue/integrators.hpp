#pragma once

// Stepping kernels. Each kernel has a deterministic `*_update` form that takes
// the standard-normal vector explicitly, and a `*_step` form that draws it
// from a counter-based stream.

#include <array>
#include <cmath>
#include <numbers>
#include <span>

#include "hglue/core/error.hpp"
#include "hglue/core/rng.hpp"
#include "hglue/core/schedule.hpp"
#include "hglue/core/state.hpp"
#include "hglue/core/units.hpp"
#include "hglue/potentials.hpp"

namespace hglue {

namespace detail {

inline void require_step(double dt) {
    if (!(dt > 0.0)) throw DomainError("time step must be > 0");
}

inline Vector checked_gradient(const DriftProvider& drift, std::span<const double> x,
                               const std::optional<RngSite>& site) {
    Vector g(x.size());
    drift.gradient(x, g);
    if (!all_finite(g)) throw StepError("non-finite drift", site);
    return g;
}

} // namespace detail

/// log N(y; mean, variance * I).
inline double gaussian_log_density(std::span<const double> y, std::span<const double> mean, double variance) {
    double sq = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - mean[i];
        sq += d * d;
    }
    const double dim = static_cast<double>(y.size());
    return -sq / (2.0 * variance) - 0.5 * dim * std::log(2.0 * std::numbers::pi * variance);
}

// --- overdamped Euler-Maruyama --------------------------------------------

/// x - grad V(x) dt + sqrt(2 D dt) xi.
inline Vector em_update(std::span<const double> x, double dt, const DriftProvider& drift, const Units& units,
                        std::span<const double> xi, std::optional<RngSite> site = std::nullopt) {
    detail::require_step(dt);
    const Vector g = detail::checked_gradient(drift, x, site);
    const double sigma = std::sqrt(2.0 * units.diffusion * dt);
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - dt * g[i] + sigma * xi[i];
    return out;
}

inline Vector em_step(std::span<const double> x, double dt, const DriftProvider& drift, const Units& units,
                      const RngStream& stream) {
    const Vector xi = gaussian_draw(stream, x.size());
    return em_update(x, dt, drift, units, xi, stream.site());
}

/// Mean of the EM transition: x - grad V(x) dt.
inline Vector em_mean(std::span<const double> x, double dt, const DriftProvider& drift) {
    const Vector g = detail::checked_gradient(drift, x, std::nullopt);
    Vector m(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) m[i] = x[i] - dt * g[i];
    return m;
}

/// log p(x_to | x_from) of the exact EM Gaussian kernel.
inline double em_log_density(std::span<const double> x_from, std::span<const double> x_to, double dt,
                             const DriftProvider& drift, const Units& units) {
    return gaussian_log_density(x_to, em_mean(x_from, dt, drift), 2.0 * units.diffusion * dt);
}

// --- harmonic kernel --------------------------------------------------------

/// Draw from N(m, 2 D dt I) with m = x - D dt g(x).
///
/// `g` is a drift proxy in learned-energy units (grad of beta V). In reduced
/// units (D = beta = 1) the result is bit-identical to em_update for g = grad V.
inline Vector harmonic_kernel_update(std::span<const double> x, double dt, const DriftProvider& g,
                                     const Units& units, std::span<const double> xi,
                                     std::optional<RngSite> site = std::nullopt) {
    detail::require_step(dt);
    const Vector gx = detail::checked_gradient(g, x, site);
    const double shift = units.diffusion * dt;
    const double sigma = std::sqrt(2.0 * units.diffusion * dt);
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - shift * gx[i] + sigma * xi[i];
    return out;
}

inline Vector harmonic_kernel_step(std::span<const double> x, double dt, const DriftProvider& g,
                                   const Units& units, const RngStream& stream) {
    const Vector xi = gaussian_draw(stream, x.size());
    return harmonic_kernel_update(x, dt, g, units, xi, stream.site());
}

inline Vector harmonic_mean(std::span<const double> x, double dt, const DriftProvider& g, const Units& units) {
    const Vector gx = detail::checked_gradient(g, x, std::nullopt);
    const double shift = units.diffusion * dt;
    Vector m(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) m[i] = x[i] - shift * gx[i];
    return m;
}

// --- stochastic Heun ----------------------------------------------------------

/// Predictor/corrector with one shared xi:
///   psi(a, b)  = -grad V(b) - D k (b - a)
///   pred       = x + psi(x_prev, x) dt + sqrt(2 D dt) xi
///   x'         = x + dt/2 [psi(x_prev, x) + psi(x, pred)] + sqrt(2 D dt) xi
///
/// `split_stiffness` is the glue spring k of the split drift; 0 gives the plain
/// stochastic Heun scheme, stiffness_for_step(dt) the fully glued split form.
inline Vector heun_update(std::span<const double> x_prev, std::span<const double> x, double dt,
                          const DriftProvider& drift, const Units& units, std::span<const double> xi,
                          double split_stiffness = 0.0, std::optional<RngSite> site = std::nullopt) {
    detail::require_step(dt);
    const std::size_t d = x.size();
    const double sigma = std::sqrt(2.0 * units.diffusion * dt);
    const double spring = units.diffusion * split_stiffness;

    Vector psi0 = detail::checked_gradient(drift, x, site);
    for (std::size_t i = 0; i < d; ++i) psi0[i] = -psi0[i] - spring * (x[i] - x_prev[i]);

    Vector pred(d);
    for (std::size_t i = 0; i < d; ++i) pred[i] = x[i] + psi0[i] * dt + sigma * xi[i];

    Vector psi1 = detail::checked_gradient(drift, pred, site);
    Vector out(d);
    for (std::size_t i = 0; i < d; ++i) {
        psi1[i] = -psi1[i] - spring * (pred[i] - x[i]);
        out[i] = x[i] + 0.5 * dt * (psi0[i] + psi1[i]) + sigma * xi[i];
    }
    return out;
}

inline Vector heun_step(std::span<const double> x_prev, std::span<const double> x, double dt,
                        const DriftProvider& drift, const Units& units, const RngStream& stream,
                        double split_stiffness = 0.0) {
    const Vector xi = gaussian_draw(stream, x.size());
    return heun_update(x_prev, x, dt, drift, units, xi, split_stiffness, stream.site());
}

// --- underdamped Euler-Maruyama ----------------------------------------------

struct UnderdampedState {
    Vector x;
    Vector v;
    double gamma = 1.0;
};

/// x' = x + v dt;  v' = v - gamma v dt - grad V(x) dt + sqrt(2 gamma D dt) xi.
inline UnderdampedState underdamped_em_update(const UnderdampedState& s, double dt, const DriftProvider& drift,
                                              const Units& units, std::span<const double> xi,
                                              std::optional<RngSite> site = std::nullopt) {
    detail::require_step(dt);
    if (!(s.gamma >= 0.0)) throw DomainError("underdamped: gamma must be >= 0");
    if (s.x.size() != s.v.size()) throw DomainError("underdamped: x and v must have equal length");
    const Vector g = detail::checked_gradient(drift, s.x, site);
    const double sigma = std::sqrt(2.0 * s.gamma * units.diffusion * dt);
    UnderdampedState out{Vector(s.x.size()), Vector(s.v.size()), s.gamma};
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        out.x[i] = s.x[i] + s.v[i] * dt;
        out.v[i] = s.v[i] - s.gamma * s.v[i] * dt - g[i] * dt + sigma * xi[i];
    }
    return out;
}

inline UnderdampedState underdamped_em_step(const UnderdampedState& s, double dt, const DriftProvider& drift,
                                            const Units& units, const RngStream& stream) {
    const Vector xi = gaussian_draw(stream, s.v.size());
    return underdamped_em_update(s, dt, drift, units, xi, stream.site());
}

/// log p(v' | x, v): Gaussian with mean v - gamma v dt - grad V(x) dt, variance 2 gamma D dt.
inline double velocity_log_density(const UnderdampedState& from, std::span<const double> v_to, double dt,
                                   const DriftProvider& drift, const Units& units) {
    const Vector g = drift.gradient(from.x);
    Vector m(from.v.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = from.v[i] - from.gamma * from.v[i] * dt - g[i] * dt;
    return gaussian_log_density(v_to, m, 2.0 * from.gamma * units.diffusion * dt);
}

// --- Strang two-direction composition ----------------------------------------

enum class SubstepKind { em, heun };

/// One substep of a split scheme: drift applied over `drift_time`, Brownian
/// increment with variance 2 D `noise_time` per coordinate.
inline Vector split_substep(std::span<const double> x, double drift_time, double noise_time,
                            const DriftProvider& drift, const Units& units, std::span<const double> xi,
                            SubstepKind kind, std::optional<RngSite> site = std::nullopt) {
    const std::size_t d = x.size();
    const double sigma = std::sqrt(2.0 * units.diffusion * noise_time);
    const Vector g0 = detail::checked_gradient(drift, x, site);
    Vector out(d);
    for (std::size_t i = 0; i < d; ++i) out[i] = x[i] - drift_time * g0[i] + sigma * xi[i];
    if (kind == SubstepKind::em) return out;

    const Vector g1 = detail::checked_gradient(drift, out, site);
    for (std::size_t i = 0; i < d; ++i) out[i] = x[i] - 0.5 * drift_time * (g0[i] + g1[i]) + sigma * xi[i];
    return out;
}

/// The three sub-steps of one Strang macro-step, in application order.
struct StrangStages {
    std::array<double, 3> drift_time;
    std::array<double, 3> noise_time;
    std::array<const DriftProvider*, 3> drift;
};

/// Horizontal half / vertical full / horizontal half. Drifts act over dt/2, dt,
/// dt/2 so the composition integrates dX = -(grad V_v + grad V_h) dt + sqrt(2D) dW;
/// the noise budget is split as (a_h dt/2, a_v dt, a_h dt/2).
inline StrangStages strang_stages(double dt, const Split& split, const DriftProvider& vertical,
                                  const DriftProvider& horizontal) {
    return StrangStages{{0.5 * dt, dt, 0.5 * dt},
                        {0.5 * split.horizontal * dt, split.vertical * dt, 0.5 * split.horizontal * dt},
                        {&horizontal, &vertical, &horizontal}};
}

/// Deterministic Strang macro-step; `xi[j]` feeds stage j. Returns every
/// intermediate point when `path` is non-null (x, y1, y2, y3).
inline Vector strang_update(std::span<const double> x, double dt, const Split& split,
                            const DriftProvider& vertical, const DriftProvider& horizontal, const Units& units,
                            const std::array<std::span<const double>, 3>& xi, SubstepKind kind = SubstepKind::em,
                            std::vector<Vector>* path = nullptr, std::optional<RngSite> site = std::nullopt) {
    detail::require_step(dt);
    split.validate();
    const StrangStages st = strang_stages(dt, split, vertical, horizontal);
    Vector cur(x.begin(), x.end());
    if (path) {
        path->clear();
        path->push_back(cur);
    }
    for (int j = 0; j < 3; ++j) {
        cur = split_substep(cur, st.drift_time[j], st.noise_time[j], *st.drift[j], units, xi[j], kind, site);
        if (path) path->push_back(cur);
    }
    return cur;
}

/// Stages draw from streams[0..2]; callers label them (n, b, base + 0/1/2).
inline Vector strang_step(std::span<const double> x, double dt, const Split& split, const DriftProvider& vertical,
                          const DriftProvider& horizontal, const Units& units,
                          const std::array<RngStream, 3>& streams, SubstepKind kind = SubstepKind::em,
                          std::vector<Vector>* path = nullptr) {
    const Vector a = gaussian_draw(streams[0], x.size());
    const Vector b = gaussian_draw(streams[1], x.size());
    const Vector c = gaussian_draw(streams[2], x.size());
    return strang_update(x, dt, split, vertical, horizontal, units, {a, b, c}, kind, path, streams[0].site());
}

inline std::array<RngStream, 3> strang_streams(const RngStream& base) {
    return {base.offset(stage::step), base.offset(stage::strang_mid), base.offset(stage::strang_last)};
}

} // namespace hglue
