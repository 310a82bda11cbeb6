#pragma once

#include <cmath>
#include <vector>

#include "hglue/core/error.hpp"

namespace hglue {

/// Fractions of one macro-step assigned to the vertical and horizontal directions.
struct Split {
    double vertical = 1.0;
    double horizontal = 0.0;

    void validate() const {
        if (vertical < 0.0 || horizontal < 0.0 || std::abs(vertical + horizontal - 1.0) > 1e-12)
            throw DomainError("split fractions must be non-negative and sum to 1");
    }
};

class Schedule {
public:
    Schedule() = default;

    explicit Schedule(std::vector<double> steps, std::vector<double> tempering = {}, Split split = {})
        : steps_(std::move(steps)), tempering_(std::move(tempering)), split_(split) {
        if (tempering_.empty()) tempering_.assign(steps_.size(), 1.0);
        if (tempering_.size() != steps_.size())
            throw DomainError("schedule: tempering list must match the number of steps");
        for (double dt : steps_)
            if (!(dt > 0.0)) throw DomainError("schedule: every step must be > 0");
        for (double u : tempering_)
            if (!(u > 0.0)) throw DomainError("schedule: every tempering multiplier must be > 0");
        split_.validate();
        horizon_ = 0.0;
        for (double dt : steps_) horizon_ += dt;
    }

    static Schedule uniform(std::size_t n, double dt, Split split = {}) {
        return Schedule(std::vector<double>(n, dt), {}, split);
    }

    std::size_t size() const noexcept { return steps_.size(); }
    double step(std::size_t n) const { return steps_.at(n); }
    double tempering(std::size_t n) const { return tempering_.at(n); }
    const std::vector<double>& steps() const noexcept { return steps_; }
    const std::vector<double>& tempering() const noexcept { return tempering_; }
    const Split& split() const noexcept { return split_; }
    double horizon() const noexcept { return horizon_; }

    /// t_n, the time at the start of step n.
    double time_at(std::size_t n) const {
        double t = 0.0;
        for (std::size_t i = 0; i < n && i < steps_.size(); ++i) t += steps_[i];
        return t;
    }

    Schedule with_tempering(std::vector<double> tempering) const {
        return Schedule(steps_, std::move(tempering), split_);
    }

private:
    std::vector<double> steps_;
    std::vector<double> tempering_;
    Split split_{};
    double horizon_ = 0.0;
};

/// "Early hot, late cold": geometric decay from upsilon_max at step 0 to 1 at the last step.
inline std::vector<double> geometric_tempering(std::size_t n, double upsilon_max) {
    if (!(upsilon_max >= 1.0)) throw DomainError("geometric_tempering: upsilon_max must be >= 1");
    std::vector<double> out(n, 1.0);
    if (n < 2) return out;
    const double ratio = std::pow(upsilon_max, 1.0 / static_cast<double>(n - 1));
    for (std::size_t i = 0; i < n; ++i)
        out[i] = upsilon_max / std::pow(ratio, static_cast<double>(i));
    out.back() = 1.0;
    return out;
}

} // namespace hglue
