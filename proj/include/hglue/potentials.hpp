#pragma once

// Analytic drift providers. They stand in for a learned energy: value() is the
// energy V(x) and gradient() is grad V(x), the force the sampler descends.

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hglue/core/error.hpp"
#include "hglue/core/rng.hpp"
#include "hglue/core/state.hpp"
#include "hglue/core/tolerances.hpp"

namespace hglue {

class DriftProvider {
public:
    virtual ~DriftProvider() = default;

    virtual double value(std::span<const double> x) const = 0;
    virtual void gradient(std::span<const double> x, std::span<double> out) const = 0;

    /// Required state length; 0 means any length.
    virtual std::size_t dimension() const { return 0; }
    virtual std::string_view label() const = 0;

    /// Global Lipschitz constant of the gradient, when one exists.
    virtual std::optional<double> lipschitz() const { return std::nullopt; }

    /// Period of each coordinate, when the energy is angle-periodic.
    virtual std::optional<double> period() const { return std::nullopt; }

    Vector gradient(std::span<const double> x) const {
        Vector g(x.size());
        gradient(x, g);
        return g;
    }
};

using DriftPtr = std::shared_ptr<const DriftProvider>;

/// Central-difference gradient, h scaled per coordinate by max(1, |x_i|).
inline Vector finite_difference_gradient(const DriftProvider& p, std::span<const double> x,
                                         double h = tol::fd_step_scale) {
    Vector probe(x.begin(), x.end());
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double step = h * std::max(1.0, std::abs(x[i]));
        const double xi = probe[i];
        probe[i] = xi + step;
        const double up = p.value(probe);
        probe[i] = xi - step;
        const double down = p.value(probe);
        probe[i] = xi;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

// ---------------------------------------------------------------------------

/// V(x) = kappa ||x - c||^2 / 2.
class Quadratic final : public DriftProvider {
public:
    using DriftProvider::gradient;
    Quadratic(double kappa, Vector center) : kappa_(kappa), center_(std::move(center)) {
        if (!(kappa > 0.0)) throw DomainError("make_quadratic: kappa must be > 0");
        if (center_.empty()) throw DomainError("make_quadratic: center must be non-empty");
    }

    double value(std::span<const double> x) const override {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - center_[i];
            s += d * d;
        }
        return 0.5 * kappa_ * s;
    }

    void gradient(std::span<const double> x, std::span<double> out) const override {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = kappa_ * (x[i] - center_[i]);
    }

    std::size_t dimension() const override { return center_.size(); }
    std::string_view label() const override { return "quadratic"; }
    std::optional<double> lipschitz() const override { return kappa_; }

    double kappa() const noexcept { return kappa_; }
    const Vector& center() const noexcept { return center_; }

private:
    double kappa_;
    Vector center_;
};

/// V(x) = sum_i a (x_i^2 - b^2)^2, wells at x_i = +-b.
class DoubleWell final : public DriftProvider {
public:
    using DriftProvider::gradient;
    DoubleWell(double a, double b, std::size_t dim = 1) : a_(a), b_(b), dim_(dim) {
        if (!(a > 0.0) || !(b > 0.0)) throw DomainError("make_double_well: a and b must be > 0");
        if (dim == 0) throw DomainError("make_double_well: dim must be >= 1");
    }

    double value(std::span<const double> x) const override {
        double s = 0.0;
        for (double xi : x) {
            const double q = xi * xi - b_ * b_;
            s += a_ * q * q;
        }
        return s;
    }

    void gradient(std::span<const double> x, std::span<double> out) const override {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = 4.0 * a_ * x[i] * (x[i] * x[i] - b_ * b_);
    }

    std::size_t dimension() const override { return dim_; }
    std::string_view label() const override { return "double-well"; }

    double barrier() const noexcept { return a_ * b_ * b_ * b_ * b_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }

private:
    double a_, b_;
    std::size_t dim_;
};

/// V(theta) = sum_j h_j cos(j theta + phi_j), j = 1..3, summed over coordinates.
///
/// The phases are fixed at zero. With h_3 > 0 dominating, the minima sit near
/// -60, 60 and 180 degrees (gauche-, gauche+, trans); h_1 > 0 lowers the trans
/// well relative to the gauche wells.
class TorsionRing final : public DriftProvider {
public:
    using DriftProvider::gradient;
    explicit TorsionRing(std::array<double, 3> heights, std::size_t dim = 1) : h_(heights), dim_(dim) {
        for (double h : h_)
            if (!std::isfinite(h)) throw DomainError("make_torsion_ring: heights must be finite");
        if (dim == 0) throw DomainError("make_torsion_ring: dim must be >= 1");
    }

    double value(std::span<const double> x) const override {
        double s = 0.0;
        for (double t : x)
            for (int j = 0; j < 3; ++j) s += h_[j] * std::cos((j + 1) * t + phase_[j]);
        return s;
    }

    void gradient(std::span<const double> x, std::span<double> out) const override {
        for (std::size_t i = 0; i < x.size(); ++i) {
            double g = 0.0;
            for (int j = 0; j < 3; ++j) g -= (j + 1) * h_[j] * std::sin((j + 1) * x[i] + phase_[j]);
            out[i] = g;
        }
    }

    std::size_t dimension() const override { return dim_; }
    std::string_view label() const override { return "torsion-ring"; }
    std::optional<double> lipschitz() const override {
        return std::abs(h_[0]) + 4.0 * std::abs(h_[1]) + 9.0 * std::abs(h_[2]);
    }
    std::optional<double> period() const override { return 2.0 * std::numbers::pi; }

    const std::array<double, 3>& heights() const noexcept { return h_; }

private:
    std::array<double, 3> h_;
    static constexpr std::array<double, 3> phase_{0.0, 0.0, 0.0};
    std::size_t dim_;
};

/// V = V_a + V_b; the drift of the sum SDE used by splitting schemes.
class SumDrift final : public DriftProvider {
public:
    using DriftProvider::gradient;
    SumDrift(DriftPtr a, DriftPtr b) : a_(std::move(a)), b_(std::move(b)) {}

    double value(std::span<const double> x) const override { return a_->value(x) + b_->value(x); }

    void gradient(std::span<const double> x, std::span<double> out) const override {
        a_->gradient(x, out);
        Vector tmp(x.size());
        b_->gradient(x, tmp);
        for (std::size_t i = 0; i < x.size(); ++i) out[i] += tmp[i];
    }

    std::size_t dimension() const override { return std::max(a_->dimension(), b_->dimension()); }
    std::string_view label() const override { return "sum"; }
    std::optional<double> lipschitz() const override {
        auto la = a_->lipschitz(), lb = b_->lipschitz();
        if (la && lb) return *la + *lb;
        return std::nullopt;
    }

private:
    DriftPtr a_, b_;
};

/// s * V; used to express grad V in learned-energy units (s = beta).
class ScaledDrift final : public DriftProvider {
public:
    using DriftProvider::gradient;
    ScaledDrift(DriftPtr base, double scale) : base_(std::move(base)), scale_(scale) {}

    double value(std::span<const double> x) const override { return scale_ * base_->value(x); }
    void gradient(std::span<const double> x, std::span<double> out) const override {
        base_->gradient(x, out);
        for (double& g : out) g *= scale_;
    }
    std::size_t dimension() const override { return base_->dimension(); }
    std::string_view label() const override { return base_->label(); }
    std::optional<double> lipschitz() const override {
        if (auto l = base_->lipschitz()) return std::abs(scale_) * *l;
        return std::nullopt;
    }
    std::optional<double> period() const override { return base_->period(); }

private:
    DriftPtr base_;
    double scale_;
};

/// Zero energy everywhere (pure diffusion).
class FreeDrift final : public DriftProvider {
public:
    using DriftProvider::gradient;
    double value(std::span<const double>) const override { return 0.0; }
    void gradient(std::span<const double>, std::span<double> out) const override {
        std::fill(out.begin(), out.end(), 0.0);
    }
    std::string_view label() const override { return "free"; }
    std::optional<double> lipschitz() const override { return 0.0; }
};

// ---------------------------------------------------------------------------

enum class PerturbationMode { constant_shift, smooth_random };

/// Drift proxy g = grad V + eps(x) with sup ||eps|| <= eps_bar.
///
/// The perturbation is not a gradient field in general, so value() returns the
/// base energy unchanged.
class PerturbedDrift final : public DriftProvider {
public:
    using DriftProvider::gradient;
    PerturbedDrift(DriftPtr base, double eps_bar, PerturbationMode mode, std::size_t dim,
                   std::uint64_t seed = 0x5eedu)
        : base_(std::move(base)), eps_bar_(eps_bar), mode_(mode), dim_(dim) {
        if (!(eps_bar >= 0.0)) throw DomainError("perturb: eps_bar must be >= 0");
        if (dim == 0) throw DomainError("perturb: dim must be >= 1");
        const double amp = eps_bar_ / std::sqrt(static_cast<double>(dim_));
        amplitude_ = amp;
        if (mode_ == PerturbationMode::smooth_random) {
            // Per output coordinate: a random unit frequency vector and phase.
            freq_.resize(dim_ * dim_);
            phase_.resize(dim_);
            for (std::size_t i = 0; i < dim_; ++i) {
                Vector w = gaussian_draw(RngStream(seed, 0, static_cast<std::uint32_t>(i), 0), dim_);
                double norm = 0.0;
                for (double v : w) norm += v * v;
                norm = std::sqrt(norm);
                for (std::size_t j = 0; j < dim_; ++j) freq_[i * dim_ + j] = w[j] / norm;
                phase_[i] = 2.0 * std::numbers::pi * RngStream(seed, 1, static_cast<std::uint32_t>(i), 0).uniform();
            }
        }
    }

    double value(std::span<const double> x) const override { return base_->value(x); }

    void gradient(std::span<const double> x, std::span<double> out) const override {
        base_->gradient(x, out);
        for (std::size_t i = 0; i < x.size(); ++i) out[i] += perturbation_component(x, i);
    }

    Vector perturbation(std::span<const double> x) const {
        Vector e(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) e[i] = perturbation_component(x, i);
        return e;
    }

    std::size_t dimension() const override { return dim_; }
    std::string_view label() const override { return "perturbed"; }
    std::optional<double> period() const override { return base_->period(); }

    double eps_bar() const noexcept { return eps_bar_; }
    const DriftPtr& base() const noexcept { return base_; }

private:
    double perturbation_component(std::span<const double> x, std::size_t i) const {
        if (mode_ == PerturbationMode::constant_shift) return amplitude_;
        double arg = phase_[i];
        for (std::size_t j = 0; j < dim_; ++j) arg += freq_[i * dim_ + j] * x[j];
        return amplitude_ * std::sin(arg);
    }

    DriftPtr base_;
    double eps_bar_;
    PerturbationMode mode_;
    std::size_t dim_;
    double amplitude_ = 0.0;
    Vector freq_;
    Vector phase_;
};

// ---------------------------------------------------------------------------

inline DriftPtr make_quadratic(double kappa, Vector center) {
    return std::make_shared<Quadratic>(kappa, std::move(center));
}

inline DriftPtr make_double_well(double a, double b, std::size_t dim = 1) {
    return std::make_shared<DoubleWell>(a, b, dim);
}

inline DriftPtr make_torsion_ring(std::array<double, 3> heights, std::size_t dim = 1) {
    return std::make_shared<TorsionRing>(heights, dim);
}

inline std::shared_ptr<const PerturbedDrift> perturb(DriftPtr base, double eps_bar, PerturbationMode mode,
                                                     std::size_t dim, std::uint64_t seed = 0x5eedu) {
    return std::make_shared<PerturbedDrift>(std::move(base), eps_bar, mode, dim, seed);
}

inline DriftPtr make_sum(DriftPtr a, DriftPtr b) { return std::make_shared<SumDrift>(std::move(a), std::move(b)); }

/// grad of beta * V: a drift proxy in learned-energy units.
inline DriftPtr energy_units(DriftPtr base, double beta) {
    if (beta == 1.0) return base;
    return std::make_shared<ScaledDrift>(std::move(base), beta);
}

/// Parameters accepted by the potential registry.
struct PotentialParams {
    std::size_t dim = 1;
    double kappa = 1.0;
    Vector center;                              // defaults to the origin
    double a = 1.0;                             // double-well barrier scale
    double b = 1.0;                             // double-well half separation
    std::array<double, 3> heights{0.5, 0.0, 1.0};
    double eps_bar = 0.0;
    PerturbationMode perturbation = PerturbationMode::constant_shift;
};

using PotentialFactory = std::function<DriftPtr(const PotentialParams&)>;

inline const std::map<std::string, PotentialFactory, std::less<>>& potential_registry() {
    static const std::map<std::string, PotentialFactory, std::less<>> registry{
        {"quadratic",
         [](const PotentialParams& p) {
             Vector c = p.center.empty() ? Vector(p.dim, 0.0) : p.center;
             return make_quadratic(p.kappa, std::move(c));
         }},
        {"double-well", [](const PotentialParams& p) { return make_double_well(p.a, p.b, p.dim); }},
        {"torsion-ring", [](const PotentialParams& p) { return make_torsion_ring(p.heights, p.dim); }},
        {"free", [](const PotentialParams&) -> DriftPtr { return std::make_shared<FreeDrift>(); }},
    };
    return registry;
}

/// Builds a provider by label, wrapping it in a perturbation when eps_bar > 0.
inline DriftPtr make_potential(std::string_view label, const PotentialParams& params) {
    const auto& reg = potential_registry();
    auto it = reg.find(label);
    if (it == reg.end()) throw ConfigError("potential.kind", "unknown potential '" + std::string(label) + "'");
    DriftPtr base = it->second(params);
    if (params.eps_bar > 0.0) {
        const std::size_t dim = base->dimension() ? base->dimension() : params.dim;
        return perturb(base, params.eps_bar, params.perturbation, dim);
    }
    return base;
}

} // namespace hglue
