#pragma once

// Uniform front end over the stepping kernels, used by the batch sampler, the
// MH wrapper and the diagnostics harness.

#include <memory>
#include <string_view>
#include <vector>

#include "hglue/glue.hpp"
#include "hglue/integrators.hpp"

namespace hglue {

enum class KernelKind { em, harmonic, tempered, heun, underdamped, strang, adjacent_glue, anchored_glue };

inline std::string_view to_string(KernelKind k) {
    switch (k) {
        case KernelKind::em: return "em";
        case KernelKind::harmonic: return "harmonic";
        case KernelKind::tempered: return "tempered";
        case KernelKind::heun: return "heun";
        case KernelKind::underdamped: return "underdamped";
        case KernelKind::strang: return "strang";
        case KernelKind::adjacent_glue: return "adjacent-glue";
        case KernelKind::anchored_glue: return "anchored-glue";
    }
    return "?";
}

inline KernelKind kernel_kind_from(std::string_view s) {
    for (auto k : {KernelKind::em, KernelKind::harmonic, KernelKind::tempered, KernelKind::heun,
                   KernelKind::underdamped, KernelKind::strang, KernelKind::adjacent_glue,
                   KernelKind::anchored_glue})
        if (to_string(k) == s) return k;
    throw ConfigError("sampler.kind", "unknown kernel '" + std::string(s) + "'");
}

struct KernelOptions {
    Split split{};                          // strang only
    DriftPtr horizontal;                    // strang only
    SubstepKind substep = SubstepKind::em;  // strang only
    double heun_split_stiffness = 0.0;
    std::optional<double> glue_stiffness;   // adjacent glue; unset derives k from dt
    double anchor_stiffness = 1.0;
    double gamma = 1.0;
};

struct StepInput {
    std::span<const double> x_prev;  // empty means x (X_{-1} = X_0)
    std::span<const double> x;
    std::span<const double> v;       // underdamped only
    double dt = 0.0;
    double upsilon = 1.0;            // tempered only
    RngStream stream;                // base stage; multi-stage kernels use offsets
};

struct StepOutput {
    Vector x;
    Vector v;                        // underdamped only
    std::vector<Vector> path;        // strang: x, y1, y2, y3
};

class StepKernel {
public:
    StepKernel(KernelKind kind, DriftPtr drift, Units units = {}, KernelOptions options = {})
        : kind_(kind), drift_(std::move(drift)), units_(units), opt_(std::move(options)) {
        if (!drift_) throw DomainError("StepKernel: drift required");
        if (kind_ == KernelKind::strang) {
            if (!opt_.horizontal) throw DomainError("StepKernel: strang needs a horizontal drift");
            opt_.split.validate();
        }
        if (kind_ == KernelKind::underdamped && !(opt_.gamma > 0.0))
            throw DomainError("StepKernel: gamma must be > 0");
    }

    KernelKind kind() const noexcept { return kind_; }
    const DriftProvider& drift() const noexcept { return *drift_; }
    const DriftPtr& drift_ptr() const noexcept { return drift_; }
    const Units& units() const noexcept { return units_; }
    const KernelOptions& options() const noexcept { return opt_; }

    /// RNG stages one application consumes.
    int stages() const noexcept {
        switch (kind_) {
            case KernelKind::strang: return 3;
            case KernelKind::anchored_glue: return 2;
            default: return 1;
        }
    }

    bool needs_velocity() const noexcept { return kind_ == KernelKind::underdamped; }

    StepOutput advance(const StepInput& in) const {
        const auto x = in.x;
        const auto prev = in.x_prev.empty() ? in.x : in.x_prev;
        const RngStream& s = in.stream;
        StepOutput out;
        switch (kind_) {
            case KernelKind::em: out.x = em_step(x, in.dt, *drift_, units_, s); break;
            case KernelKind::harmonic: out.x = harmonic_kernel_step(x, in.dt, *drift_, units_, s); break;
            case KernelKind::tempered:
                out.x = tempered_kernel_step(x, in.dt, in.upsilon, *drift_, units_, s);
                break;
            case KernelKind::heun:
                out.x = heun_step(prev, x, in.dt, *drift_, units_, s, opt_.heun_split_stiffness);
                break;
            case KernelKind::underdamped: {
                if (in.v.size() != x.size()) throw DomainError("underdamped kernel needs velocities");
                UnderdampedState st{Vector(x.begin(), x.end()), Vector(in.v.begin(), in.v.end()), opt_.gamma};
                st = underdamped_em_step(st, in.dt, *drift_, units_, s);
                out.x = std::move(st.x);
                out.v = std::move(st.v);
                break;
            }
            case KernelKind::strang:
                out.x = strang_step(x, in.dt, opt_.split, *drift_, *opt_.horizontal, units_, strang_streams(s),
                                    opt_.substep, &out.path);
                break;
            case KernelKind::adjacent_glue:
                out.x = adjacent_glue_step(prev, x, in.dt, *drift_, units_, s, opt_.glue_stiffness);
                break;
            case KernelKind::anchored_glue:
                out.x = anchored_glue_step(x, in.dt, *drift_, opt_.anchor_stiffness, units_, s.offset(stage::anchor),
                                           s);
                break;
        }
        return out;
    }

    /// Deterministic step with caller-supplied standard normals, one vector per
    /// RNG stage. Used by coupled-noise harnesses. Velocity and anchor kernels
    /// are not supported.
    Vector propagate(std::span<const double> x_prev, std::span<const double> x, double dt,
                     std::span<const Vector> xi, double upsilon = 1.0, std::vector<Vector>* path = nullptr) const {
        if (xi.size() != static_cast<std::size_t>(stages())) throw DomainError("propagate: one noise vector per stage");
        const auto prev = x_prev.empty() ? x : x_prev;
        switch (kind_) {
            case KernelKind::em: return em_update(x, dt, *drift_, units_, xi[0]);
            case KernelKind::harmonic: return harmonic_kernel_update(x, dt, *drift_, units_, xi[0]);
            case KernelKind::tempered: return tempered_kernel_update(x, dt, upsilon, *drift_, units_, xi[0]);
            case KernelKind::heun: return heun_update(prev, x, dt, *drift_, units_, xi[0], opt_.heun_split_stiffness);
            case KernelKind::strang:
                return strang_update(x, dt, opt_.split, *drift_, *opt_.horizontal, units_, {xi[0], xi[1], xi[2]},
                                     opt_.substep, path);
            case KernelKind::adjacent_glue:
                return adjacent_glue_update(prev, x, dt, *drift_, units_, xi[0], opt_.glue_stiffness);
            default: break;
        }
        throw DomainError("propagate: unsupported kernel '" + std::string(to_string(kind_)) + "'");
    }

    /// Drift of the continuous SDE this kernel discretizes (vertical + horizontal for strang).
    Vector total_gradient(std::span<const double> x) const {
        Vector g = drift_->gradient(x);
        if (kind_ == KernelKind::strang) {
            const Vector h = opt_.horizontal->gradient(x);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += h[i];
        }
        return g;
    }

    /// Noise-time fraction of each stage within one step.
    std::vector<double> stage_noise_fractions() const {
        if (kind_ == KernelKind::strang)
            return {0.5 * opt_.split.horizontal, opt_.split.vertical, 0.5 * opt_.split.horizontal};
        return std::vector<double>(static_cast<std::size_t>(stages()), 1.0);
    }

    /// True when the proposal density of one step is available in closed form.
    bool has_density() const noexcept {
        switch (kind_) {
            case KernelKind::em:
            case KernelKind::harmonic:
            case KernelKind::tempered: return true;
            case KernelKind::strang:
                return opt_.substep == SubstepKind::em && opt_.split.vertical > 0.0 && opt_.split.horizontal > 0.0;
            default: return false;
        }
    }

    /// log q(from -> to). Strang proposals use the realized stage path
    /// (from, y1, y2, to); the density is the product of stage Gaussians.
    double log_density(std::span<const double> from, std::span<const double> to, double dt,
                       std::span<const Vector> path = {}, double upsilon = 1.0) const {
        switch (kind_) {
            case KernelKind::em: return em_log_density(from, to, dt, *drift_, units_);
            case KernelKind::harmonic:
            case KernelKind::tempered: {
                const double u = kind_ == KernelKind::tempered ? upsilon : 1.0;
                return gaussian_log_density(to, harmonic_mean(from, dt, *drift_, units_),
                                            2.0 * units_.diffusion * dt * u);
            }
            case KernelKind::strang: {
                if (!has_density()) break;
                if (path.size() != 4) throw DomainError("strang density needs the stage path");
                const StrangStages st = strang_stages(dt, opt_.split, *drift_, *opt_.horizontal);
                double lp = 0.0;
                for (int j = 0; j < 3; ++j) {
                    const Vector g = st.drift[j]->gradient(path[j]);
                    Vector m(g.size());
                    for (std::size_t i = 0; i < g.size(); ++i) m[i] = path[j][i] - st.drift_time[j] * g[i];
                    lp += gaussian_log_density(path[j + 1], m, 2.0 * units_.diffusion * st.noise_time[j]);
                }
                return lp;
            }
            default: break;
        }
        throw DomainError("kernel '" + std::string(to_string(kind_)) + "' has no closed-form proposal density");
    }

private:
    KernelKind kind_;
    DriftPtr drift_;
    Units units_;
    KernelOptions opt_;
};

} // namespace hglue
