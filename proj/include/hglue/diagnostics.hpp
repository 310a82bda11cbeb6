#pragma once

// Empirical checks of the sampler's error theory: path-space KL, weak order,
// stationary bias, step budgets and a few scaling probes.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hglue/core/rng.hpp"
#include "hglue/core/schedule.hpp"
#include "hglue/exactness.hpp"
#include "hglue/kernel.hpp"
#include "hglue/observables.hpp"
#include "hglue/parallel.hpp"

namespace hglue {

using Observable = std::function<double(std::span<const double>)>;

// --- regression ---------------------------------------------------------------

struct SlopeFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double stderr_ = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    std::size_t points = 0;
};

/// Least-squares slope of log y against log x.
inline SlopeFit fit_loglog(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw DomainError("fit_loglog: length mismatch");
    SlopeFit f;
    f.points = x.size();
    if (x.size() < 2) return f;
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("fit_loglog: values must be positive");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y[i]) - my);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = std::log(y[i]) - (f.intercept + f.slope * std::log(x[i]));
            ssr += r * r;
        }
        f.stderr_ = std::sqrt(ssr / (n - 2.0) / sxx);
    } else {
        f.stderr_ = 0.0;
    }
    return f;
}

/// Running mean / variance in fixed chunks, combined in chunk order so totals
/// do not depend on the worker count.
struct Moments {
    double n = 0.0, sum = 0.0, sumsq = 0.0;
    void add(double v) {
        n += 1.0;
        sum += v;
        sumsq += v * v;
    }
    void merge(const Moments& o) {
        n += o.n;
        sum += o.sum;
        sumsq += o.sumsq;
    }
    double mean() const { return sum / n; }
    double variance() const { return n > 1.0 ? std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0)) : 0.0; }
    double stderr_of_mean() const { return std::sqrt(variance() / n); }
};

namespace detail {

inline constexpr std::size_t kChunks = 64;

/// Runs body(path, acc) for every path with per-chunk accumulators of type Acc.
template <class Acc, class Body>
Acc chunked_reduce(std::size_t paths, std::size_t workers, Acc init, Body body) {
    const std::size_t chunks = std::min(kChunks, std::max<std::size_t>(1, paths));
    std::vector<Acc> part(chunks, init);
    parallel_for(chunks, workers, [&](std::size_t c) {
        const std::size_t lo = paths * c / chunks, hi = paths * (c + 1) / chunks;
        for (std::size_t p = lo; p < hi; ++p) body(p, part[c]);
    });
    Acc total = init;
    for (const auto& a : part) total.merge(a);
    return total;
}

} // namespace detail

// --- pathwise KL -----------------------------------------------------------------

struct PathKlConfig {
    Schedule schedule;
    std::size_t paths = 10000;
    int substeps = 8;              // quadrature nodes per step along the frozen-drift path
    Vector x0{0.0};
    bool gaussian_init = false;    // x0 + N(0, I) per path
    std::uint64_t seed = 1;
    std::size_t workers = 1;
};

struct PathKlResult {
    double kl = 0.0;
    double stderr_ = 0.0;
};

/// Girsanov estimate of KL(sampler path law || SDE path law):
///   (1 / 4 D_n) sum_n E int_{t_n}^{t_{n+1}} ||grad V(X~_t) - g_n(X_{t_n})||^2 dt
/// with X~ the continuous frozen-drift interpolation of the sampler, sampled
/// exactly at `substeps` points per step and integrated by the trapezoid rule.
/// D_n = upsilon_n D under tempering. Equal seeds give coupled noise.
inline PathKlResult path_kl_estimate(const DriftProvider& true_drift, const DriftProvider& used_drift,
                                     const Units& units, const PathKlConfig& cfg) {
    if (cfg.substeps < 1) throw DomainError("path_kl_estimate: substeps must be >= 1");
    const std::size_t dim = cfg.x0.size();
    const auto M = static_cast<std::uint32_t>(cfg.substeps);
    auto body = [&](std::size_t p, Moments& acc) {
        const auto pb = static_cast<std::uint32_t>(p);
        Vector x = cfg.x0;
        if (cfg.gaussian_init) {
            const Vector z = gaussian_draw(RngStream(cfg.seed, 0, pb, stage::init), dim);
            for (std::size_t i = 0; i < dim; ++i) x[i] += z[i];
        }
        Vector g(dim), gv(dim), xi(dim), y(dim);
        double total = 0.0;
        for (std::size_t n = 0; n < cfg.schedule.size(); ++n) {
            const double dt = cfg.schedule.step(n);
            const double dn = units.diffusion * cfg.schedule.tempering(n);
            const double h = dt / M;
            const double sigma = std::sqrt(2.0 * dn * h);
            used_drift.gradient(x, g);
            auto gap = [&](const Vector& at) {
                true_drift.gradient(at, gv);
                double s = 0.0;
                for (std::size_t i = 0; i < dim; ++i) s += (gv[i] - g[i]) * (gv[i] - g[i]);
                return s;
            };
            double integral = 0.5 * gap(x);
            y = x;
            for (std::uint32_t j = 0; j < M; ++j) {
                RngStream(cfg.seed, static_cast<std::uint32_t>(n), pb, 16 + j).fill_gaussian(xi);
                for (std::size_t i = 0; i < dim; ++i) y[i] += -h * g[i] + sigma * xi[i];
                integral += (j + 1 == M ? 0.5 : 1.0) * gap(y);
            }
            total += integral * h / (4.0 * dn);
            x = y;
            if (!all_finite(x)) throw StepError("path_kl_estimate: non-finite state");
        }
        acc.add(total);
    };
    const Moments m = detail::chunked_reduce(cfg.paths, cfg.workers, Moments{}, body);
    return {m.mean(), m.stderr_of_mean()};
}

/// Node-only form over recorded frames[t][b]:
///   (1 / 4 D_n) sum_n ||grad V(x_n) - g_n(x_n)||^2 dt_n, averaged over b.
inline double path_kl_node_sum(const std::vector<std::vector<Vector>>& frames, const DriftProvider& true_drift,
                               const DriftProvider& used_drift, const Schedule& schedule, const Units& units) {
    if (frames.size() < schedule.size()) throw DomainError("path_kl_node_sum: fewer frames than steps");
    if (frames.empty() || frames[0].empty()) return 0.0;
    const std::size_t B = frames[0].size();
    double total = 0.0;
    for (std::size_t n = 0; n < schedule.size(); ++n) {
        const double dn = units.diffusion * schedule.tempering(n);
        for (std::size_t b = 0; b < B; ++b) {
            const Vector gt = true_drift.gradient(frames[n][b]);
            const Vector gu = used_drift.gradient(frames[n][b]);
            double s = 0.0;
            for (std::size_t i = 0; i < gt.size(); ++i) s += (gt[i] - gu[i]) * (gt[i] - gu[i]);
            total += s * schedule.step(n) / (4.0 * dn);
        }
    }
    return total / static_cast<double>(B);
}

struct KlBudgetReport {
    double model_term = 0.0;      // KL(eps) - KL(0), coupled noise
    double schedule_term = 0.0;   // KL(0)
    double empirical_kl = 0.0;    // KL(eps)
    double stderr_ = 0.0;
    std::size_t steps = 0;
    Vector dts;
    double eps_bar = 0.0;
};

/// Splits the empirical KL at one grid into schedule and model parts.
inline KlBudgetReport kl_budget(const DriftProvider& potential, const DriftProvider& used, double eps_bar,
                                const Units& units, const PathKlConfig& cfg) {
    const PathKlResult full = path_kl_estimate(potential, used, units, cfg);
    const PathKlResult zero = path_kl_estimate(potential, potential, units, cfg);
    KlBudgetReport r;
    r.empirical_kl = full.kl;
    r.stderr_ = full.stderr_;
    r.schedule_term = zero.kl;
    r.model_term = full.kl - zero.kl;
    r.steps = cfg.schedule.size();
    r.dts = cfg.schedule.steps();
    r.eps_bar = eps_bar;
    return r;
}

struct RefinementRow {
    std::size_t steps = 0;
    double eps_bar = 0.0;
    KlBudgetReport report;
};

/// KL budget over uniform grids of N steps on [0, horizon] with eps_bar = eps_schedule(N).
inline std::vector<RefinementRow> refinement_sweep(const DriftPtr& potential,
                                                   const std::function<DriftPtr(double)>& make_used,
                                                   const std::vector<std::size_t>& grids,
                                                   const std::function<double(std::size_t)>& eps_schedule,
                                                   double horizon, const Units& units, PathKlConfig base) {
    std::vector<RefinementRow> rows;
    for (std::size_t n : grids) {
        const double eps = eps_schedule(n);
        base.schedule = Schedule::uniform(n, horizon / static_cast<double>(n));
        const DriftPtr used = eps > 0.0 ? make_used(eps) : potential;
        rows.push_back({n, eps, kl_budget(*potential, *used, eps, units, base)});
    }
    return rows;
}

/// Steps needed so the schedule term stays under eps^2:
/// N >= beta L_tot^2 T^2 / (2 (eps^2 - beta T eps_bar^2)).
inline std::size_t steps_for_accuracy(double eps, double eps_bar, double lipschitz_total, double horizon,
                                      const Units& units) {
    const double floor = units.beta * horizon * eps_bar * eps_bar;
    const double room = eps * eps - floor;
    if (!(room > 0.0))
        throw DomainError("steps_for_accuracy: target eps^2 must exceed the model-error floor beta T eps_bar^2 = " +
                          std::to_string(floor));
    const double n = units.beta * lipschitz_total * lipschitz_total * horizon * horizon / (2.0 * room);
    return static_cast<std::size_t>(std::ceil(n - 1e-9));
}

// --- weak order ---------------------------------------------------------------------

struct WeakOrderConfig {
    Vector x0{1.0};
    double horizon = 1.0;
    Vector dts{0.2, 0.1, 0.05, 0.025};
    std::size_t paths = 1000000;
    int refine = 64;               // reference step = min(dts) / refine
    std::uint64_t seed = 7;
    std::size_t workers = 1;
    double floor_sigmas = 3.0;     // points with |error| below this many stderrs are excluded
};

struct WeakPoint {
    double dt = 0.0;
    double error = 0.0;
    double stderr_ = 0.0;
    bool excluded = false;
};

struct WeakOrderResult {
    std::vector<WeakPoint> points;
    SlopeFit fit;
    double reference = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

struct WeakAcc {
    std::vector<Moments> diff;   // [kernel * n_dt + i]
    Moments ref;
    void merge(const WeakAcc& o) {
        if (diff.size() < o.diff.size()) diff.resize(o.diff.size());
        for (std::size_t i = 0; i < o.diff.size(); ++i) diff[i].merge(o.diff[i]);
        ref.merge(o.ref);
    }
};

} // namespace detail

/// Weak error of E f(X_T) for each kernel against a fine-grid EM reference on
/// the kernel's total drift. Every path shares one fine Brownian path across
/// the reference and all coarse runs; coarse stage noise is the normalized sum
/// of the fine increments in that stage's share of the step. The reference is
/// Richardson-extrapolated from EM at dt_ref and 2 dt_ref.
inline std::vector<WeakOrderResult> weak_order_sweep(const std::vector<const StepKernel*>& kernels,
                                                     const Observable& f, const WeakOrderConfig& cfg) {
    if (cfg.dts.size() < 2) throw DomainError("weak_order: need at least two step sizes");
    if (kernels.empty()) throw DomainError("weak_order: no kernels");
    const double dt_min = *std::min_element(cfg.dts.begin(), cfg.dts.end());
    const double dt_ref = dt_min / cfg.refine;
    const auto n_fine = static_cast<std::size_t>(std::llround(cfg.horizon / dt_ref));
    if (n_fine % 2 != 0) throw DomainError("weak_order: horizon must hold an even number of reference steps");

    struct Plan {
        std::size_t steps, per_step;
        std::vector<std::size_t> stage_counts;
    };
    const std::size_t K = kernels.size(), ND = cfg.dts.size();
    std::vector<Plan> plans(K * ND);
    for (std::size_t k = 0; k < K; ++k) {
        const auto fr = kernels[k]->stage_noise_fractions();
        for (std::size_t i = 0; i < ND; ++i) {
            Plan pl;
            pl.per_step = static_cast<std::size_t>(std::llround(cfg.dts[i] / dt_ref));
            pl.steps = n_fine / pl.per_step;
            if (pl.steps * pl.per_step != n_fine) throw DomainError("weak_order: dt must divide the horizon");
            std::size_t used = 0;
            for (double q : fr) {
                const double c = q * static_cast<double>(pl.per_step);
                if (std::abs(c - std::round(c)) > 1e-9) throw DomainError("weak_order: stage share not on the grid");
                pl.stage_counts.push_back(static_cast<std::size_t>(std::llround(c)));
                used += pl.stage_counts.back();
            }
            if (used != pl.per_step) throw DomainError("weak_order: stage shares must cover the step");
            plans[k * ND + i] = std::move(pl);
        }
    }

    const std::size_t dim = cfg.x0.size();
    const StepKernel& ref_kernel = *kernels.front();
    detail::WeakAcc init;
    init.diff.resize(K * ND);

    auto body = [&](std::size_t p, detail::WeakAcc& acc) {
        const auto pb = static_cast<std::uint32_t>(p);
        Vector fine(n_fine * dim);
        for (std::size_t j = 0; j < n_fine; ++j)
            RngStream(cfg.seed, static_cast<std::uint32_t>(j), pb, 0)
                .fill_gaussian(std::span<double>(fine.data() + j * dim, dim));

        // Reference chains on the total drift.
        const double s1 = std::sqrt(2.0 * ref_kernel.units().diffusion * dt_ref);
        const double s2 = std::sqrt(2.0 * ref_kernel.units().diffusion * 2.0 * dt_ref);
        Vector a = cfg.x0, b = cfg.x0;
        for (std::size_t j = 0; j < n_fine; ++j) {
            const Vector g = ref_kernel.total_gradient(a);
            for (std::size_t i = 0; i < dim; ++i) a[i] += -dt_ref * g[i] + s1 * fine[j * dim + i];
            if (j % 2 == 1) {
                const Vector gb = ref_kernel.total_gradient(b);
                for (std::size_t i = 0; i < dim; ++i)
                    b[i] += -2.0 * dt_ref * gb[i] +
                            s2 * (fine[(j - 1) * dim + i] + fine[j * dim + i]) / std::numbers::sqrt2;
            }
        }
        const double ref = 2.0 * f(a) - f(b);
        acc.ref.add(ref);

        std::vector<Vector> xi;
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t i = 0; i < ND; ++i) {
                const Plan& pl = plans[k * ND + i];
                const double dt = cfg.dts[i];
                Vector x = cfg.x0, prev = cfg.x0;
                xi.assign(pl.stage_counts.size(), Vector(dim));
                for (std::size_t s = 0; s < pl.steps; ++s) {
                    std::size_t j = s * pl.per_step;
                    for (std::size_t st = 0; st < pl.stage_counts.size(); ++st) {
                        Vector& z = xi[st];
                        std::fill(z.begin(), z.end(), 0.0);
                        const std::size_t c = pl.stage_counts[st];
                        for (std::size_t q = 0; q < c; ++q, ++j)
                            for (std::size_t d = 0; d < dim; ++d) z[d] += fine[j * dim + d];
                        const double norm = c ? 1.0 / std::sqrt(static_cast<double>(c)) : 0.0;
                        for (double& v : z) v *= norm;
                    }
                    Vector next = kernels[k]->propagate(prev, x, dt, xi);
                    prev = std::move(x);
                    x = std::move(next);
                }
                acc.diff[k * ND + i].add(f(x) - ref);
            }
        }
    };

    const detail::WeakAcc total = detail::chunked_reduce(cfg.paths, cfg.workers, init, body);

    std::vector<WeakOrderResult> out(K);
    for (std::size_t k = 0; k < K; ++k) {
        WeakOrderResult& r = out[k];
        r.reference = total.ref.mean();
        Vector xs, ys;
        for (std::size_t i = 0; i < ND; ++i) {
            const Moments& m = total.diff[k * ND + i];
            WeakPoint wp{cfg.dts[i], m.mean(), m.stderr_of_mean(), false};
            if (std::abs(wp.error) < cfg.floor_sigmas * wp.stderr_) {
                wp.excluded = true;
                r.warnings.push_back("dt=" + std::to_string(wp.dt) + ": weak error below the noise floor, excluded");
            } else {
                xs.push_back(wp.dt);
                ys.push_back(std::abs(wp.error));
            }
            r.points.push_back(wp);
        }
        if (xs.size() >= 2) r.fit = fit_loglog(xs, ys);
        else r.warnings.push_back("fewer than two usable points; no slope");
    }
    return out;
}

inline WeakOrderResult weak_order_fit(const StepKernel& kernel, const Observable& f, const WeakOrderConfig& cfg) {
    return weak_order_sweep({&kernel}, f, cfg).front();
}

// --- stationary bias -------------------------------------------------------------------

struct StationaryEstimate {
    double dt = 0.0;
    double mean = 0.0;
    double sigma = 0.0;      // tau_int-aware standard error
    double tau_int = 1.0;
    double bias = 0.0;
    double acceptance = 1.0;
};

struct StationaryConfig {
    Vector x0{0.0};
    std::size_t steps = 1000000;
    std::size_t burn_in = 10000;
    std::uint64_t seed = 11;
    bool metropolis = false;
    const DriftProvider* target = nullptr;   // MH target; defaults to the kernel drift
};

/// Long-run average of F along one chain (replica 0, site (n, 0)).
inline StationaryEstimate stationary_average(const StepKernel& kernel, const Observable& F, double dt,
                                             const StationaryConfig& cfg) {
    const DriftProvider& target = cfg.target ? *cfg.target : kernel.drift();
    ObservableSeries series;
    series.values.reserve(cfg.steps);
    Vector x = cfg.x0, prev = cfg.x0;
    std::size_t accepted = 0;
    for (std::size_t n = 0; n < cfg.burn_in + cfg.steps; ++n) {
        const RngStream base(cfg.seed, static_cast<std::uint32_t>(n), 0, 0);
        StepInput in;
        in.x_prev = prev;
        in.x = x;
        in.dt = dt;
        in.stream = base;
        StepOutput prop = kernel.advance(in);
        bool ok = true;
        if (cfg.metropolis) {
            const auto rec = make_record(kernel, target, x, prop, dt);
            ok = mh_accept(rec, base.with_stage(stage::accept)).accepted;
        }
        if (ok) {
            ++accepted;
            prev = std::move(x);
            x = std::move(prop.x);
        } else {
            prev = x;
        }
        if (n >= cfg.burn_in) series.values.push_back(F(x));
    }
    StationaryEstimate e;
    e.dt = dt;
    double s = 0.0;
    for (double v : series.values) s += v;
    e.mean = s / static_cast<double>(series.size());
    const auto tau = integrated_autocorrelation(series);
    e.tau_int = tau.tau_int;
    double var = 0.0;
    for (double v : series.values) var += (v - e.mean) * (v - e.mean);
    var /= static_cast<double>(series.size());
    // Var(mean) = var tau_int / N for tau_int = 1 + 2 sum rho.
    e.sigma = std::isfinite(tau.tau_int) ? std::sqrt(var * tau.tau_int / static_cast<double>(series.size())) : 0.0;
    e.acceptance = static_cast<double>(accepted) / static_cast<double>(cfg.burn_in + cfg.steps);
    return e;
}

struct StationaryBiasResult {
    std::vector<StationaryEstimate> points;
    SlopeFit fit;
    std::vector<std::string> warnings;
};

/// Bias E_dt[F] - exact over a list of step sizes and its log-log slope.
inline StationaryBiasResult stationary_bias_fit(const StepKernel& kernel, const Observable& F, double exact,
                                                const Vector& dts, const StationaryConfig& cfg) {
    StationaryBiasResult r;
    Vector xs, ys;
    for (double dt : dts) {
        StationaryEstimate e = stationary_average(kernel, F, dt, cfg);
        e.bias = e.mean - exact;
        if (std::abs(e.bias) < 3.0 * e.sigma) {
            r.warnings.push_back("dt=" + std::to_string(dt) + ": bias within 3 sigma of zero, excluded from fit");
        } else {
            xs.push_back(dt);
            ys.push_back(std::abs(e.bias));
        }
        r.points.push_back(e);
    }
    if (xs.size() >= 2) r.fit = fit_loglog(xs, ys);
    return r;
}

// --- quadrature oracles ------------------------------------------------------------------

/// Integral of F(x) e^{-beta V(x)} over [lo, hi] divided by the integral of
/// e^{-beta V}, composite Simpson with n (even) panels.
inline double boltzmann_average_1d(const DriftProvider& v, const std::function<double(double)>& F, double beta,
                                   double lo, double hi, std::size_t n = 20000) {
    if (n % 2) ++n;
    const double h = (hi - lo) / static_cast<double>(n);
    double vmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = lo + h * static_cast<double>(i);
        vmin = std::min(vmin, v.value(std::span<const double>(&x, 1)));
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = lo + h * static_cast<double>(i);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double p = std::exp(-beta * (v.value(std::span<const double>(&x, 1)) - vmin));
        num += w * p * F(x);
        den += w * p;
    }
    return num / den;
}

// --- scaling probes ------------------------------------------------------------------------

/// Sample covariance (per coordinate, averaged) of one Strang step with zero
/// drifts from a fixed point.
inline double noise_fusion_variance(const Split& split, double dt, std::size_t samples, std::size_t dim,
                                    std::uint64_t seed, const Units& units = {}) {
    const FreeDrift zero;
    const Vector x0(dim, 0.0);
    Moments m;
    for (std::size_t s = 0; s < samples; ++s) {
        const RngStream base(seed, static_cast<std::uint32_t>(s), 0, 0);
        const Vector y = strang_step(x0, dt, split, zero, zero, units, strang_streams(base));
        for (double v : y) m.add(v);
    }
    return m.sumsq / m.n;
}

struct GlueScaling {
    double dt = 0.0;
    double rms_mismatch = 0.0;          // RMS of ||x_{n+1} - x_n + dt g(x_n)||
    double exponent_drift_part = 0.0;   // mean of (k/2)(||x' - x + dt g||^2 - ||x' - x||^2)
    double exponent_drift_stderr = 0.0;
    double spring_energy = 0.0;         // mean of (k/2)||x' - x||^2
};

/// Runs adjacent glue for `steps` steps of size dt and measures the one-step
/// mismatch against the plain drift and the Gaussian exponent pieces.
inline GlueScaling glue_scaling_probe(const DriftProvider& g, const Vector& x0, double dt, std::size_t steps,
                                      std::uint64_t seed, const Units& units = {}) {
    const double k = stiffness_for_step(dt, units);
    Vector prev = x0, x = x0;
    Moments mis, drift_part, spring;
    for (std::size_t n = 0; n < steps; ++n) {
        const RngStream s(seed, static_cast<std::uint32_t>(n), 0, 0);
        const Vector next = adjacent_glue_step(prev, x, dt, g, units, s);
        const Vector gx = g.gradient(x);
        double m2 = 0.0, d2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = next[i] - x[i];
            const double r = d + dt * gx[i];
            m2 += r * r;
            d2 += d * d;
        }
        mis.add(m2);
        drift_part.add(0.5 * k * (m2 - d2));
        spring.add(0.5 * k * d2);
        prev = std::move(x);
        x = next;
    }
    return {dt, std::sqrt(mis.mean()), drift_part.mean(), drift_part.stderr_of_mean(), spring.mean()};
}

/// Exact stationary variance of EM on V = kappa x^2 / 2: 2D / (kappa (2 - kappa dt)).
inline double em_ou_stationary_variance(double kappa, double dt, const Units& units = {}) {
    if (!(kappa * dt > 0.0 && kappa * dt < 2.0)) throw DomainError("EM on OU is unstable for kappa dt >= 2");
    return 2.0 * units.diffusion / (kappa * (2.0 - kappa * dt));
}

} // namespace hglue
