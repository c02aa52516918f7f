#pragma once

#include <vector>

#include "dpe/qd_model.hpp"

namespace dpe {

enum class PulseShape { Gaussian };

/// A single laser pulse. Field amplitudes are expressed as the instantaneous
/// Rabi rate Omega(t) of a transition with unit polarization overlap.
struct PulseSpec {
  PulseShape shape = PulseShape::Gaussian;
  double fwhm_ps = 10.0;
  double center_ps = 0.0;
  double carrier_mev = 0.0;
  JonesVector polarization = jones_h();
  double peak_rabi = 0.0;  // rad/ps

  void validate() const;
};

struct PulseTrain {
  std::vector<PulseSpec> pulses;
  double repetition_period_ps = 12500.0;

  void validate() const;
};

double envelope(const PulseSpec& pulse, double t_ps);

/// Pulse area in radians (closed form).
double area(const PulseSpec& pulse);

PulseSpec scale_to_area(const PulseSpec& pulse, double target_rad);

/// Half-width beyond which a pulse is treated as switched off.
double support_half_width(const PulseSpec& pulse);

}  // namespace dpe
