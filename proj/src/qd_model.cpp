#include "dpe/qd_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dpe/units.hpp"

namespace dpe {

void LevelScheme::validate() const {
  if (!(binding_energy_mev > 0.0))
    throw std::invalid_argument("scheme.binding_energy_mev: must be > 0 (bound biexciton)");
  if (!(fss_uev >= 0.0)) throw std::invalid_argument("scheme.fss_uev: must be >= 0");
  if (!(b_field_t >= 0.0)) throw std::invalid_argument("scheme.b_field_t: must be >= 0");
  if (zeeman_sign != 1 && zeeman_sign != -1)
    throw std::invalid_argument("scheme.zeeman_sign: must be +1 or -1");
  if (!std::isfinite(exciton_energy_mev) || !std::isfinite(g_factor) ||
      !std::isfinite(diamagnetic_uev_per_t2))
    throw std::invalid_argument("scheme: non-finite parameter");
}

LevelEnergies level_energies(const LevelScheme& s) {
  const double ex = s.exciton_energy_mev;
  const double eb = s.binding_energy_mev;
  const double b = s.b_field_t;
  if (b == 0.0) {
    const double half_fss = 0.5 * s.fss_uev / units::kMicroEvPerMeV;
    return {0.0, ex + half_fss, ex - half_fss, 2.0 * ex - eb};
  }
  const double dia = s.diamagnetic_uev_per_t2 / units::kMicroEvPerMeV * b * b;
  const double zeeman = 0.5 * s.g_factor * units::kBohrMagnetonMeVPerT * b * s.zeeman_sign;
  // X_a = sigma+, X_b = sigma-; the spin-singlet XX has no Zeeman term.
  return {0.0, ex - zeeman + dia, ex + zeeman + dia, 2.0 * ex - eb + 2.0 * dia};
}

LaserEnergies laser_energies(const LevelScheme& scheme, Branch target) {
  const auto e = level_energies(scheme);
  const double e_xx = e[index(Level::XX)];
  return {0.5 * e_xx, e_xx - e[index(exciton_level(target))]};
}

JonesVector jones_h() { return {1.0, 0.0}; }
JonesVector jones_v() { return {0.0, 1.0}; }

JonesVector jones_linear(double angle_deg) {
  const double a = units::deg_to_rad(angle_deg);
  return {std::cos(a), std::sin(a)};
}

JonesVector jones_sigma_plus() {
  return JonesVector(1.0, std::complex<double>(0.0, 1.0)) / std::sqrt(2.0);
}

JonesVector jones_sigma_minus() {
  return JonesVector(1.0, std::complex<double>(0.0, -1.0)) / std::sqrt(2.0);
}

JonesVector ground_dipole(Basis basis, Branch branch) {
  if (basis == Basis::Linear) return branch == Branch::A ? jones_h() : jones_v();
  return branch == Branch::A ? jones_sigma_plus() : jones_sigma_minus();
}

JonesVector biexciton_dipole(Basis basis, Branch branch) {
  if (basis == Basis::Linear) return branch == Branch::A ? jones_h() : jones_v();
  // Angular momentum: XX -> X_sigma+ emits sigma-, XX -> X_sigma- emits sigma+.
  return branch == Branch::A ? jones_sigma_minus() : jones_sigma_plus();
}

TransitionTable transitions(const LevelScheme& scheme) {
  const auto e = level_energies(scheme);
  const Basis basis = scheme.basis();
  const double e_xx = e[index(Level::XX)];
  return {{
      {TransitionLabel::Xa, Level::Xa, Level::G, e[index(Level::Xa)], ground_dipole(basis, Branch::A)},
      {TransitionLabel::Xb, Level::Xb, Level::G, e[index(Level::Xb)], ground_dipole(basis, Branch::B)},
      {TransitionLabel::XXtoXa, Level::XX, Level::Xa, e_xx - e[index(Level::Xa)],
       biexciton_dipole(basis, Branch::A)},
      {TransitionLabel::XXtoXb, Level::XX, Level::Xb, e_xx - e[index(Level::Xb)],
       biexciton_dipole(basis, Branch::B)},
  }};
}

std::string_view to_string(TransitionLabel label) {
  switch (label) {
    case TransitionLabel::Xa: return "X_a";
    case TransitionLabel::Xb: return "X_b";
    case TransitionLabel::XXtoXa: return "XX->X_a";
    case TransitionLabel::XXtoXb: return "XX->X_b";
  }
  return "?";
}

Eigen::VectorXd synthesize_spectrum(std::span<const SpectralLine> lines, LineProfile profile,
                                    std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("synthesize_spectrum: empty energy grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] < grid[i - 1])
      throw std::invalid_argument("synthesize_spectrum: grid must be sorted ascending");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (const auto& line : lines) {
    if (!(line.fwhm_mev > 0.0))
      throw std::invalid_argument("synthesize_spectrum: linewidth must be positive");
    const double hw = 0.5 * line.fwhm_mev;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = (grid[i] - line.center_mev) / hw;
      const double shape = profile == LineProfile::Gaussian ? std::exp(-std::log(2.0) * x * x)
                                                            : 1.0 / (1.0 + x * x);
      out[static_cast<Eigen::Index>(i)] += line.weight * shape;
    }
  }
  return out;
}

std::vector<SpectralLine> spectral_lines(const TransitionTable& table, double fwhm_mev,
                                         std::span<const double> weights) {
  if (weights.size() != table.size())
    throw std::invalid_argument("spectral_lines: need one weight per transition");
  std::vector<SpectralLine> lines;
  for (std::size_t i = 0; i < table.size(); ++i)
    lines.push_back({table[i].energy_mev, fwhm_mev, weights[i]});
  return lines;
}

}  // namespace dpe
