#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace dpe {

using JonesVector = Eigen::Vector2cd;

/// Fixed state ordering of the four-level dot.
enum class Level : int { G = 0, Xa = 1, Xb = 2, XX = 3 };

inline constexpr int index(Level l) { return static_cast<int>(l); }

/// Exciton eigenbasis: H/V at zero field, sigma+/sigma- in Faraday geometry.
enum class Basis { Linear, Circular };

/// One of the two exciton branches (X_a = H or sigma+, X_b = V or sigma-).
enum class Branch { A, B };

inline constexpr Level exciton_level(Branch b) { return b == Branch::A ? Level::Xa : Level::Xb; }

struct LevelScheme {
  double exciton_energy_mev = 1363.9;
  double fss_uev = 5.9;
  double binding_energy_mev = 0.90;
  double g_factor = 3.11;
  double diamagnetic_uev_per_t2 = 0.0;
  double b_field_t = 0.0;
  // +1 places X_sigma- on the upper Zeeman branch.
  int zeeman_sign = +1;

  Basis basis() const { return b_field_t == 0.0 ? Basis::Linear : Basis::Circular; }

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;
};

/// Energies of G, X_a, X_b, XX in meV (E_G = 0).
using LevelEnergies = std::array<double, 4>;

LevelEnergies level_energies(const LevelScheme& scheme);

struct LaserEnergies {
  double tpe_mev;
  double trigger_mev;
};

/// TPE at half the G->XX energy; trigger resonant with XX -> X_target.
LaserEnergies laser_energies(const LevelScheme& scheme, Branch target = Branch::B);

enum class TransitionLabel { Xa, Xb, XXtoXa, XXtoXb };

struct Transition {
  TransitionLabel label;
  Level from;
  Level to;
  double energy_mev;
  JonesVector polarization;
};

using TransitionTable = std::array<Transition, 4>;

TransitionTable transitions(const LevelScheme& scheme);

std::string_view to_string(TransitionLabel label);

// Common Jones vectors, S3 > 0 for sigma+ (right circular).
JonesVector jones_h();
JonesVector jones_v();
JonesVector jones_linear(double angle_deg);
JonesVector jones_sigma_plus();
JonesVector jones_sigma_minus();

/// Dipole polarization of the G <-> X_j and X_j <-> XX transitions.
JonesVector ground_dipole(Basis basis, Branch branch);
JonesVector biexciton_dipole(Basis basis, Branch branch);

enum class LineProfile { Gaussian, Lorentzian };

struct SpectralLine {
  double center_mev;
  double fwhm_mev;
  double weight;
};

/// Sum of area-free line profiles, each normalized to `weight` at its centre.
Eigen::VectorXd synthesize_spectrum(std::span<const SpectralLine> lines, LineProfile profile,
                                    std::span<const double> energy_grid_mev);

/// Convenience: one line per transition with a shared linewidth.
std::vector<SpectralLine> spectral_lines(const TransitionTable& table, double fwhm_mev,
                                         std::span<const double> weights);

}  // namespace dpe
