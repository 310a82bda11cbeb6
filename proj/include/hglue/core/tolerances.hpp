#pragma once

namespace hglue::tol {

// Every numeric threshold used by invariant checks lives here.
inline constexpr double units_product = 1e-12;      // |beta*D - 1|
inline constexpr double stiffness_roundtrip = 1e-12;
inline constexpr double fd_relative = 1e-6;         // provider gradient vs central differences
inline constexpr double fd_step_scale = 1e-5;
inline constexpr double periodicity = 1e-12;
inline constexpr double perturbation_sup = 1e-9;     // relative slack on declared eps_bar
inline constexpr double rotation = 1e-9;
inline constexpr double psd_floor = -1e-10;
inline constexpr double glue_eps = 1e-9;             // radial glue distance stabilizer default

} // namespace hglue::tol
