#include "dpe/pulses.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpe {

namespace {

constexpr double kFourLn2 = 4.0 * std::numbers::ln2;

// Integral of exp(-4 ln2 x^2 / w^2) dx = w * sqrt(pi / (4 ln2)).
double gaussian_area_factor(double fwhm) { return fwhm * std::sqrt(std::numbers::pi / kFourLn2); }

}  // namespace

void PulseSpec::validate() const {
  if (!(fwhm_ps > 0.0)) throw std::invalid_argument("pulse.fwhm_ps: must be > 0");
  if (!(peak_rabi >= 0.0)) throw std::invalid_argument("pulse.peak_rabi: must be >= 0");
  if (std::abs(polarization.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("pulse.polarization: must be a unit Jones vector");
}

void PulseTrain::validate() const {
  if (!(repetition_period_ps > 0.0))
    throw std::invalid_argument("pulses.repetition_period_ps: must be > 0");
  for (const auto& p : pulses) p.validate();
}

double envelope(const PulseSpec& p, double t) {
  const double x = (t - p.center_ps) / p.fwhm_ps;
  return p.peak_rabi * std::exp(-kFourLn2 * x * x);
}

double area(const PulseSpec& p) { return p.peak_rabi * gaussian_area_factor(p.fwhm_ps); }

PulseSpec scale_to_area(const PulseSpec& p, double target) {
  if (!(target >= 0.0)) throw std::invalid_argument("scale_to_area: target must be >= 0");
  PulseSpec out = p;
  out.peak_rabi = target / gaussian_area_factor(p.fwhm_ps);
  return out;
}

// exp(-4 ln2 * 5^2) ~ 1e-30
double support_half_width(const PulseSpec& p) { return 5.0 * p.fwhm_ps; }

}  // namespace dpe
