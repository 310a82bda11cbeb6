#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hglue {

using Vector = std::vector<double>;

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// One lattice site's content: N*d positions, plus velocities for underdamped runs.
struct ConfigurationState {
    Vector positions;
    std::optional<Vector> velocities;
    std::uint32_t slice = 0;
    std::uint32_t replica = 0;

    std::size_t size() const noexcept { return positions.size(); }

    bool valid() const {
        if (!all_finite(positions)) return false;
        if (velocities) return velocities->size() == positions.size() && all_finite(*velocities);
        return true;
    }

    friend bool operator==(const ConfigurationState&, const ConfigurationState&) = default;
};

} // namespace hglue
