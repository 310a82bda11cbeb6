#pragma once

// Metropolis-Hastings correction and alchemical replica exchange.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "hglue/core/rng.hpp"
#include "hglue/core/schedule.hpp"
#include "hglue/kernel.hpp"

namespace hglue {

struct MhProposalRecord {
    Vector x_from;
    Vector x_to;
    double forward_logdensity = 0.0;       // log q(from -> to)
    double reverse_logdensity = 0.0;       // log q(to -> from)
    double target_logdensity_from = 0.0;   // log pi(from), up to a constant
    double target_logdensity_to = 0.0;
};

struct MhDecision {
    bool accepted = false;
    double alpha = 0.0;
    bool flagged = false;   // a log-density was not finite; forced rejection
};

/// log of the MH ratio; alpha = min(1, exp(result)).
inline double mh_log_ratio(const MhProposalRecord& r) {
    return (r.target_logdensity_to - r.target_logdensity_from) + (r.reverse_logdensity - r.forward_logdensity);
}

inline double mh_alpha(const MhProposalRecord& r) {
    const double lr = mh_log_ratio(r);
    return lr >= 0.0 ? 1.0 : std::exp(lr);
}

/// Accept when u < alpha with u drawn from `stream`.
inline MhDecision mh_accept(const MhProposalRecord& rec, const RngStream& stream) {
    for (double v : {rec.forward_logdensity, rec.reverse_logdensity, rec.target_logdensity_from,
                     rec.target_logdensity_to})
        if (!std::isfinite(v)) return {false, 0.0, true};
    const double alpha = mh_alpha(rec);
    if (alpha >= 1.0) return {true, 1.0, false};
    return {stream.uniform() < alpha, alpha, false};
}

/// Log target density -beta V(x) for the Boltzmann law of `target`.
inline double boltzmann_logdensity(const DriftProvider& target, std::span<const double> x, const Units& units) {
    return -units.beta * target.value(x);
}

/// Builds the MH record for one kernel proposal.
inline MhProposalRecord make_record(const StepKernel& kernel, const DriftProvider& target,
                                    std::span<const double> from, const StepOutput& proposal, double dt,
                                    double upsilon = 1.0) {
    MhProposalRecord rec;
    rec.x_from.assign(from.begin(), from.end());
    rec.x_to = proposal.x;
    if (kernel.kind() == KernelKind::strang) {
        std::vector<Vector> reverse(proposal.path.rbegin(), proposal.path.rend());
        rec.forward_logdensity = kernel.log_density(from, proposal.x, dt, proposal.path, upsilon);
        rec.reverse_logdensity = kernel.log_density(proposal.x, from, dt, reverse, upsilon);
    } else {
        rec.forward_logdensity = kernel.log_density(from, proposal.x, dt, {}, upsilon);
        rec.reverse_logdensity = kernel.log_density(proposal.x, from, dt, {}, upsilon);
    }
    rec.target_logdensity_from = boltzmann_logdensity(target, from, kernel.units());
    rec.target_logdensity_to = boltzmann_logdensity(target, proposal.x, kernel.units());
    return rec;
}

struct MhChain {
    std::vector<Vector> samples;    // every `stride`-th state after each step
    std::size_t proposals = 0;
    std::size_t accepted = 0;
    std::size_t flagged = 0;
    double alpha_sum = 0.0;         // Rao-Blackwellized acceptance

    double acceptance_rate() const { return proposals ? static_cast<double>(accepted) / proposals : 0.0; }
    double mean_alpha() const { return proposals ? alpha_sum / static_cast<double>(proposals) : 0.0; }
};

/// MH-wrapped chain of `n_steps` proposals of size dt on replica b = 0.
/// `observer`, when given, sees every post-step state and replaces sample storage.
inline MhChain mh_wrapped_trajectory(const StepKernel& kernel, const DriftProvider& target, Vector x0, double dt,
                                     std::size_t n_steps, std::uint64_t seed, std::size_t stride = 1,
                                     const std::function<void(std::span<const double>)>& observer = {}) {
    if (!kernel.has_density())
        throw DomainError("mh_wrapped_trajectory: kernel '" + std::string(to_string(kernel.kind())) +
                          "' has no closed-form proposal density");
    if (stride == 0) stride = 1;
    MhChain chain;
    Vector x = std::move(x0);
    for (std::size_t n = 0; n < n_steps; ++n) {
        const auto slot = static_cast<std::uint32_t>(n);
        const RngStream base(seed, slot, 0, 0);
        StepInput in;
        in.x = x;
        in.dt = dt;
        in.stream = base;
        const StepOutput prop = kernel.advance(in);
        const MhProposalRecord rec = make_record(kernel, target, x, prop, dt);
        const MhDecision d = mh_accept(rec, base.with_stage(stage::accept));
        ++chain.proposals;
        chain.alpha_sum += d.alpha;
        if (d.flagged) ++chain.flagged;
        if (d.accepted) {
            ++chain.accepted;
            x = prop.x;
        }
        if (observer) observer(x);
        else if ((n + 1) % stride == 0) chain.samples.push_back(x);
    }
    return chain;
}

// --- alchemical sheets ------------------------------------------------------------

/// U(x; lambda) family with lambda_b = b / B, b = 0..B.
struct SheetSpec {
    int B = 1;
    std::function<double(std::span<const double>, double)> u;
    std::function<void(std::span<const double>, double, std::span<double>)> grad_u;  // optional

    std::vector<double> lambdas() const {
        if (B < 1) throw DomainError("sheet: B must be >= 1");
        std::vector<double> l(static_cast<std::size_t>(B) + 1);
        for (int b = 0; b <= B; ++b) l[static_cast<std::size_t>(b)] = static_cast<double>(b) / B;
        return l;
    }

    double lambda(int b) const {
        if (b < 0 || b > B) throw DomainError("sheet: replica index out of range");
        return static_cast<double>(b) / B;
    }
};

/// Linear morph U(x; lambda) = lambda * W(x) from a provider W.
inline SheetSpec linear_sheet(int B, DriftPtr w) {
    SheetSpec s;
    s.B = B;
    s.u = [w](std::span<const double> x, double lam) { return lam * w->value(x); };
    s.grad_u = [w](std::span<const double> x, double lam, std::span<double> out) {
        w->gradient(x, out);
        for (double& o : out) o *= lam;
    };
    return s;
}

/// Swap exponent -beta [U(x_{b+1}; l_b) + U(x_b; l_{b+1}) - U(x_b; l_b) - U(x_{b+1}; l_{b+1})].
inline double arex_log_alpha(std::span<const double> x_b, std::span<const double> x_b1, double lam_b,
                             double lam_b1, const SheetSpec& sheet, double beta) {
    const double cross = sheet.u(x_b1, lam_b) + sheet.u(x_b, lam_b1);
    const double own = sheet.u(x_b, lam_b) + sheet.u(x_b1, lam_b1);
    return -beta * (cross - own);
}

inline double arex_alpha(std::span<const double> x_b, std::span<const double> x_b1, const SheetSpec& sheet, int b,
                         double beta) {
    if (b < 0 || b >= sheet.B) throw DomainError("arex: need 0 <= b < B");
    const double lr = arex_log_alpha(x_b, x_b1, sheet.lambda(b), sheet.lambda(b + 1), sheet, beta);
    return lr >= 0.0 ? 1.0 : std::exp(lr);
}

/// Swaps the two states in place on acceptance; returns true when swapped.
inline bool arex_swap(Vector& x_b, Vector& x_b1, const SheetSpec& sheet, int b, const RngStream& stream,
                      double beta = 1.0) {
    const double alpha = arex_alpha(x_b, x_b1, sheet, b, beta);
    if (alpha >= 1.0 || stream.uniform() < alpha) {
        std::swap(x_b, x_b1);
        return true;
    }
    return false;
}

} // namespace hglue
