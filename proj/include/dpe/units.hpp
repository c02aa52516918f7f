#pragma once

#include <numbers>

// Internal unit system: time in ps, energies in meV, angular frequencies in
// rad/ps, magnetic field in T.
namespace dpe::units {

inline constexpr double kPi = std::numbers::pi;

/// Reduced Planck constant in meV*ps.
inline constexpr double kHbarMeVps = 0.6582119569;

/// 1 meV expressed as an angular frequency (rad/ps).
inline constexpr double kRadPerPsPerMeV = 1.0 / kHbarMeVps;

/// Bohr magneton in meV/T.
inline constexpr double kBohrMagnetonMeVPerT = 0.05788;

inline constexpr double kMicroEvPerMeV = 1000.0;

constexpr double mev_to_rad_per_ps(double e_mev) { return e_mev * kRadPerPsPerMeV; }
constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }

}  // namespace dpe::units
