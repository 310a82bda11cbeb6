#pragma once

#include <cmath>

#include "hglue/core/error.hpp"
#include "hglue/core/tolerances.hpp"

namespace hglue {

/// Friction units: gamma = 1, D = k_B T, beta = 1 / (k_B T), so beta * D = 1.
/// k_B defaults to 1 (reduced units).
struct Units {
    double beta = 1.0;
    double diffusion = 1.0;
    double friction = 1.0;

    static Units from_temperature(double temperature, double boltzmann = 1.0) {
        if (!(temperature > 0.0) || !(boltzmann > 0.0))
            throw DomainError("temperature and k_B must be positive");
        const double kt = boltzmann * temperature;
        return Units{1.0 / kt, kt, 1.0};
    }

    static Units from_diffusion(double diffusion) {
        if (!(diffusion > 0.0)) throw DomainError("diffusion coefficient must be positive");
        return Units{1.0 / diffusion, diffusion, 1.0};
    }

    static Units reduced() { return Units{}; }

    double temperature(double boltzmann = 1.0) const { return diffusion / boltzmann; }

    bool consistent() const {
        return friction == 1.0 && std::abs(beta * diffusion - 1.0) <= tol::units_product;
    }
};

/// Spring constant of the quadratic glue equivalent to an EM step of size dt.
inline double stiffness_for_step(double dt, const Units& units) {
    if (!(dt > 0.0)) throw DomainError("stiffness_for_step: dt must be > 0");
    return 1.0 / (2.0 * units.diffusion * dt);
}

/// Inverse of stiffness_for_step: the implicit step size carried by a spring k.
inline double step_for_stiffness(double k, const Units& units) {
    if (!(k > 0.0)) throw DomainError("step_for_stiffness: k must be > 0");
    return units.beta / (2.0 * k);
}

/// Coefficient c of the Gaussian kernel exp(-c ||x' - m||^2) with covariance 2 D dt I.
inline double kernel_exponent_coefficient(double dt, const Units& units) {
    return 0.5 * stiffness_for_step(dt, units);
}

} // namespace hglue
