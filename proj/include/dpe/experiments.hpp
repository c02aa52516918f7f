#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dpe/correlations.hpp"
#include "dpe/lindblad.hpp"
#include "dpe/polarimetry.hpp"

namespace dpe {

/// One excitation cycle: TPE pulse, optional trigger, detection analyzer.
struct ExcitationSetup {
  LevelScheme scheme;
  DecayRates rates;

  double tpe_center_ps = 50.0;
  double tpe_fwhm_ps = 10.0;
  double tpe_peak_rabi = 0.88;  // rad/ps
  JonesVector tpe_polarization = jones_h();

  bool trigger_enabled = true;
  double trigger_delay_ps = 20.0;
  double trigger_fwhm_ps = 15.0;
  double trigger_area_rad = 3.14159265358979323846;
  JonesVector trigger_polarization = jones_v();
  Branch trigger_target = Branch::B;  // selects the trigger carrier

  JonesVector analyzer = jones_v();
  double repetition_period_ps = 12500.0;
  IntegratorOptions integrator;

  void validate() const;
  PulseTrain pulse_train() const;
  std::shared_ptr<const MasterEquation> model() const;
  /// Emission operator through the detection analyzer.
  Eigen::Matrix4cd detection_operator() const;
  double first_pulse_start() const;
  double last_pulse_end() const;
};

/// Zero field: V trigger and detection, 394 ps exciton, 20 ps delay. Finite
/// field: sigma+ trigger into X_sigma-, sigma- detection, 224 ps, 15 ps delay.
ExcitationSetup default_setup(double b_field_t = 0.0);

/// Time-integrated density matrix over one cycle (ps). Only elements that
/// involve an excited level are meaningful; the G-G entry is set to zero.
struct EmissionIntegral {
  Eigen::Matrix4cd rho;
  double xx_peak_population = 0.0;
  DecayRates rates;

  double emitted(const Eigen::Matrix4cd& sigma) const;  // Gamma_X Tr[s^+ s rho]
  double exciton_total() const;                         // both exciton branches
  double biexciton_total() const;                       // Gamma_XX integral of XX
};

/// Quadrature over the sampled trajectory plus the exact pulse-free tail
/// beyond its last sample.
Eigen::Matrix4cd integrated_density(const Trajectory& traj);

EmissionIntegral emission_integral(const ExcitationSetup& setup, double sample_step_ps = 0.2);

/// eta: photons per cycle into the detected mode.
double excitation_efficiency(const Trajectory& traj, const Eigen::Matrix4cd& sigma);
double excitation_efficiency(const ExcitationSetup& setup);

struct ScanResult {
  std::string axis_name;
  std::vector<double> axis;
  std::vector<std::string> names;
  std::vector<std::vector<double>> series;
  std::vector<std::pair<std::string, std::string>> metadata;

  const std::vector<double>& column(std::string_view name) const;
  /// Axis strictly monotone, every series as long as the axis.
  void validate() const;
};

ScanResult rabi_scan_tpe(const ExcitationSetup& setup, std::span<const double> amplitudes,
                         int threads = 1);
ScanResult rabi_scan_trigger(const ExcitationSetup& setup, std::span<const double> areas,
                             int threads = 1);

/// First TPE XX-emission maximum: the operational pi amplitude.
double calibrate_tpe_pi(const ExcitationSetup& setup, double max_amplitude = 1.5, int coarse_points = 31);

/// First maximum of the TPE scan refined to high precision.
double tpe_pi_amplitude(const ExcitationSetup& setup, const ScanResult& tpe_scan);
/// First minimum of the trigger scan (XX emission), in radians of area.
double trigger_pi_area(const ExcitationSetup& setup, const ScanResult& trigger_scan);

std::vector<std::size_t> local_maxima(std::span<const double> values);

struct DelayAreaMap {
  std::vector<double> delays_ps;
  std::vector<double> areas_rad;
  Eigen::MatrixXd detected;  // rows: delay, cols: area
  double tpe_only = 0.0;     // detected intensity without trigger
};

DelayAreaMap delay_area_map(const ExcitationSetup& setup, std::span<const double> delays_ps,
                            std::span<const double> areas_rad, int threads = 1);

/// Detected intensity versus linear trigger angle from H (zero field only).
ScanResult polarization_scan(const ExcitationSetup& setup, std::span<const double> angles_deg,
                             int threads = 1);

/// Transition and laser energies versus field.
ScanResult magneto_map(const LevelScheme& scheme, std::span<const double> fields_t);

/// Normalized Stokes vector of the exciton emission (analyzer-independent).
StokesVector emission_stokes(const ExcitationSetup& setup);

struct QrtGrid {
  int points = 400;
  double span_ps = 0.0;  // <= 0: five cascade lifetimes past the first pulse
};

struct PhotonStatistics {
  double g2;
  double indistinguishability;
  double efficiency;
};

Trajectory cycle_trajectory(const ExcitationSetup& setup, const QrtGrid& grid = {});
PhotonStatistics photon_statistics(const ExcitationSetup& setup, const QrtGrid& grid = {},
                                   int threads = 1);

/// Finds the pure-dephasing rate that gives the target overlap at zero field
/// and predicts the overlap of the finite-field setup with that rate.
struct DephasingCalibration {
  double gamma_deph;
  double m_zero_field;
  double m_zero_field_tpe_only;
  double m_high_field;
  double m_high_field_tpe_only;
  int evaluations;
};

DephasingCalibration calibrate_dephasing(const ExcitationSetup& zero_field,
                                         const ExcitationSetup& high_field, double target = 0.75,
                                         const QrtGrid& grid = {}, int threads = 1);

}  // namespace dpe
