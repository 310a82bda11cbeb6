#pragma once

// The (n, b) lattice: rows n follow the schedule, columns b are replicas,
// trajectory slices or alchemical sheets. Every draw is labeled by its site and
// the macro-iteration generation, so the result never depends on worker count
// or visitation order.

#include <optional>
#include <vector>

#include "hglue/core/rng.hpp"
#include "hglue/core/schedule.hpp"
#include "hglue/exactness.hpp"
#include "hglue/kernel.hpp"
#include "hglue/parallel.hpp"

namespace hglue {

constexpr int color_of(std::size_t n, std::size_t b) { return static_cast<int>((n + b) % 2); }

/// Local stage offsets inside one macro-iteration.
namespace lattice_stage {
inline constexpr std::uint32_t vertical = 0;
inline constexpr std::uint32_t horizontal = 1;
inline constexpr std::uint32_t swap = stage::swap;
inline constexpr std::uint32_t init = stage::init;
} // namespace lattice_stage

class TrajectoryLattice {
public:
    /// rows = schedule.size(); every site starts at `init`.
    TrajectoryLattice(Schedule schedule, std::size_t columns, const Vector& init)
        : schedule_(std::move(schedule)), rows_(schedule_.size()), cols_(columns) {
        if (rows_ == 0 || cols_ == 0) throw DomainError("lattice: need at least one row and one column");
        states_.reserve(rows_ * cols_);
        for (std::size_t n = 0; n < rows_; ++n)
            for (std::size_t b = 0; b < cols_; ++b)
                states_.push_back({init, std::nullopt, static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(b)});
    }

    /// Sites drawn from N(0, I) at stage `init` of generation 0.
    static TrajectoryLattice gaussian(Schedule schedule, std::size_t columns, std::size_t dim, std::uint64_t seed) {
        TrajectoryLattice lat(std::move(schedule), columns, Vector(dim, 0.0));
        for (std::size_t n = 0; n < lat.rows_; ++n)
            for (std::size_t b = 0; b < lat.cols_; ++b)
                lat.at(n, b).positions = gaussian_draw(
                    RngStream(seed, static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(b), lattice_stage::init),
                    dim);
        return lat;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t columns() const noexcept { return cols_; }
    std::uint64_t generation() const noexcept { return generation_; }
    void advance_generation() noexcept { ++generation_; }
    const Schedule& schedule() const noexcept { return schedule_; }

    ConfigurationState& at(std::size_t n, std::size_t b) { return states_.at(n * cols_ + b); }
    const ConfigurationState& at(std::size_t n, std::size_t b) const { return states_.at(n * cols_ + b); }

    /// Grid positions agree with the labels stored in each site.
    bool consistent() const {
        for (std::size_t n = 0; n < rows_; ++n)
            for (std::size_t b = 0; b < cols_; ++b) {
                const auto& s = at(n, b);
                if (s.slice != n || s.replica != b || !s.valid()) return false;
            }
        return true;
    }

    friend bool operator==(const TrajectoryLattice& a, const TrajectoryLattice& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.generation_ == b.generation_ && a.states_ == b.states_;
    }

private:
    Schedule schedule_;
    std::size_t rows_;
    std::size_t cols_;
    std::uint64_t generation_ = 0;
    std::vector<ConfigurationState> states_;
};

enum class HorizontalKind { none, glue, sheet };

/// Horizontal move at one site: an EM step on the site's auxiliary potential
/// with drift over the full dt and noise budget alpha_h dt.
///   glue:  U_b(x) = (k/2) sum over existing b-neighbors ||x - X_{n,b+-1}||^2
///   sheet: U_b(x) = U(x; b / B), followed by AREX swaps on same-colour pairs.
struct HorizontalSpec {
    HorizontalKind kind = HorizontalKind::none;
    std::optional<double> glue_stiffness;   // unset: stiffness_for_step(dt_n)
    SheetSpec sheet;                        // needs grad_u for local moves
    bool swaps = true;
};

struct LatticeStats {
    std::size_t swap_attempts = 0;
    std::size_t swaps_accepted = 0;
};

struct MacroOptions {
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    SubstepKind vertical_substep = SubstepKind::em;
};

namespace detail {

inline RngStream site_stream(std::uint64_t seed, std::size_t n, std::size_t b, std::uint64_t gen,
                             std::uint32_t local) {
    return {seed, static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(b), stage::compose(gen, local)};
}

inline void horizontal_pass(TrajectoryLattice& lat, int colour, const HorizontalSpec& h, const Split& split,
                            const Units& units, const MacroOptions& opt, LatticeStats& stats) {
    if (h.kind == HorizontalKind::none) return;
    const std::size_t rows = lat.rows(), cols = lat.columns();
    const std::uint64_t gen = lat.generation();

    // Local moves on the active colour. Neighbors in b have the other colour,
    // so they are read-only during this pass.
    if (split.horizontal > 0.0) {
        std::vector<std::pair<std::size_t, std::size_t>> sites;
        for (std::size_t n = 0; n < rows; ++n)
            for (std::size_t b = 0; b < cols; ++b)
                if (color_of(n, b) == colour) sites.emplace_back(n, b);
        std::vector<Vector> updated(sites.size());
        parallel_for(sites.size(), opt.workers, [&](std::size_t i) {
            const auto [n, b] = sites[i];
            const double dt = lat.schedule().step(n);
            const Vector& x = lat.at(n, b).positions;
            Vector grad(x.size(), 0.0);
            if (h.kind == HorizontalKind::glue) {
                const double k = h.glue_stiffness ? *h.glue_stiffness : stiffness_for_step(dt, units);
                for (std::size_t nb : {b - 1, b + 1}) {
                    if (nb >= cols) continue;  // b - 1 wraps for b = 0
                    const Vector& y = lat.at(n, nb).positions;
                    for (std::size_t j = 0; j < x.size(); ++j) grad[j] += k * (x[j] - y[j]);
                }
            } else {
                if (!h.sheet.grad_u) throw DomainError("lattice: sheet local moves need grad_u");
                h.sheet.grad_u(x, h.sheet.lambda(static_cast<int>(b)), grad);
            }
            const RngStream s = site_stream(opt.seed, n, b, gen, lattice_stage::horizontal);
            const Vector xi = gaussian_draw(s, x.size());
            const double sigma = std::sqrt(2.0 * units.diffusion * split.horizontal * dt);
            Vector out(x.size());
            for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] - dt * grad[j] + sigma * xi[j];
            if (!all_finite(out)) throw StepError("non-finite horizontal move", s.site());
            updated[i] = std::move(out);
        });
        for (std::size_t i = 0; i < sites.size(); ++i)
            lat.at(sites[i].first, sites[i].second).positions = std::move(updated[i]);
    }

    // Replica exchange on disjoint pairs (b, b+1) whose left site has this colour.
    if (h.kind == HorizontalKind::sheet && h.swaps && cols >= 2) {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t n = 0; n < rows; ++n)
            for (std::size_t b = 0; b + 1 < cols; ++b)
                if (color_of(n, b) == colour) pairs.emplace_back(n, b);
        std::vector<char> accepted(pairs.size(), 0);
        parallel_for(pairs.size(), opt.workers, [&](std::size_t i) {
            const auto [n, b] = pairs[i];
            const RngStream s = site_stream(opt.seed, n, b, gen, lattice_stage::swap);
            accepted[i] = arex_swap(lat.at(n, b).positions, lat.at(n, b + 1).positions, h.sheet,
                                    static_cast<int>(b), s, units.beta);
        });
        stats.swap_attempts += pairs.size();
        for (char a : accepted) stats.swaps_accepted += static_cast<std::size_t>(a);
    }
}

} // namespace detail

/// One macro-iteration: horizontal pass on colour 0, vertical pass on all
/// sites, horizontal pass on colour 1. Each site receives one horizontal and
/// one vertical move, so its diffusion budget is 2 D dt_n (alpha_h + alpha_v).
inline LatticeStats macro_iteration(TrajectoryLattice& lat, const DriftProvider& vertical,
                                    const HorizontalSpec& horizontal, const Split& split, const Units& units,
                                    const MacroOptions& opt) {
    split.validate();
    LatticeStats stats;
    const Split eff = horizontal.kind == HorizontalKind::none ? Split{1.0, 0.0} : split;

    detail::horizontal_pass(lat, 0, horizontal, eff, units, opt, stats);

    const std::size_t rows = lat.rows(), cols = lat.columns();
    const std::uint64_t gen = lat.generation();
    parallel_for(rows * cols, opt.workers, [&](std::size_t i) {
        const std::size_t n = i / cols, b = i % cols;
        auto& site = lat.at(n, b);
        const double dt = lat.schedule().step(n);
        const RngStream s = detail::site_stream(opt.seed, n, b, gen, lattice_stage::vertical);
        const Vector xi = gaussian_draw(s, site.size());
        site.positions = split_substep(site.positions, dt, eff.vertical * dt, vertical, units, xi,
                                       opt.vertical_substep, s.site());
    });

    detail::horizontal_pass(lat, 1, horizontal, eff, units, opt, stats);
    lat.advance_generation();
    return stats;
}

// --- batch sampler --------------------------------------------------------------

struct BatchTrajectory {
    std::vector<std::vector<Vector>> frames;   // frames[t][b], t = 0..T
    std::vector<std::vector<Vector>> velocities;
    std::size_t proposals = 0;
    std::size_t accepted = 0;

    double acceptance_rate() const { return proposals ? static_cast<double>(accepted) / proposals : 1.0; }
};

struct BatchOptions {
    std::size_t workers = 1;
    bool metropolis = false;
    const DriftProvider* target = nullptr;   // MH target; defaults to the kernel drift
    bool keep_frames = true;                 // false: keep only the first and last frame
};

/// B independent chains advanced over the schedule. Element b at step t draws
/// from site (t, b); MH decisions use the accept stage of the same site.
inline BatchTrajectory parallel_batch_sample(std::vector<Vector> batch, const StepKernel& kernel,
                                             const Schedule& schedule, std::uint64_t seed,
                                             const BatchOptions& opt = {},
                                             std::vector<Vector> velocities = {}) {
    if (batch.empty()) throw DomainError("parallel_batch_sample: empty batch");
    if (opt.metropolis && !kernel.has_density())
        throw DomainError("parallel_batch_sample: Metropolis needs a closed-form proposal density");
    const std::size_t B = batch.size();
    if (kernel.needs_velocity() && velocities.size() != B) velocities.assign(B, Vector(batch[0].size(), 0.0));
    const DriftProvider& target = opt.target ? *opt.target : kernel.drift();

    BatchTrajectory out;
    out.frames.push_back(batch);
    if (kernel.needs_velocity()) out.velocities.push_back(velocities);
    std::vector<Vector> prev = batch;
    std::vector<char> acc(B, 0);

    for (std::size_t t = 0; t < schedule.size(); ++t) {
        const double dt = schedule.step(t);
        const double ups = schedule.tempering(t);
        std::vector<Vector> next(B), next_v(kernel.needs_velocity() ? B : 0);
        parallel_for(B, opt.workers, [&](std::size_t b) {
            const RngStream base(seed, static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(b), 0);
            StepInput in;
            in.x_prev = prev[b];
            in.x = batch[b];
            if (kernel.needs_velocity()) in.v = velocities[b];
            in.dt = dt;
            in.upsilon = ups;
            in.stream = base;
            StepOutput prop = kernel.advance(in);
            acc[b] = 1;
            if (opt.metropolis) {
                const auto rec = make_record(kernel, target, batch[b], prop, dt, ups);
                acc[b] = mh_accept(rec, base.with_stage(stage::accept)).accepted;
            }
            next[b] = acc[b] ? std::move(prop.x) : batch[b];
            if (kernel.needs_velocity()) next_v[b] = std::move(prop.v);
        });
        out.proposals += B;
        for (char a : acc) out.accepted += static_cast<std::size_t>(a);
        prev = std::move(batch);
        batch = std::move(next);
        if (kernel.needs_velocity()) velocities = std::move(next_v);
        if (opt.keep_frames || t + 1 == schedule.size()) {
            out.frames.push_back(batch);
            if (kernel.needs_velocity()) out.velocities.push_back(velocities);
        }
    }
    return out;
}

/// Default initial batch: x_{0,b} ~ N(0, I_d) from the init stage of site (0, b).
inline std::vector<Vector> gaussian_batch(std::size_t B, std::size_t dim, std::uint64_t seed) {
    std::vector<Vector> out(B);
    for (std::size_t b = 0; b < B; ++b)
        out[b] = gaussian_draw(RngStream(seed, 0, static_cast<std::uint32_t>(b), stage::init), dim);
    return out;
}

} // namespace hglue
