#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "dpe/experiments.hpp"

using namespace dpe;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

// Shared across tests: calibrating costs a scan.
const ExcitationSetup& calibrated() {
  static const ExcitationSetup s = [] {
    auto setup = default_setup();
    setup.tpe_peak_rabi = calibrate_tpe_pi(setup);
    return setup;
  }();
  return s;
}

}  // namespace

TEST(RabiTpe, ZeroAmplitudeGivesNothing) {
  const std::vector<double> amps{0.0, 0.5};
  const auto r = rabi_scan_tpe(default_setup(), amps);
  EXPECT_EQ(r.column("x_intensity")[0], 0.0);
  EXPECT_EQ(r.column("xx_intensity")[0], 0.0);
  EXPECT_GT(r.column("xx_intensity")[1], 0.0);
}

TEST(RabiTpe, OscillationStructure) {
  const auto amps = linspace(0.0, 2.0, 41);
  const auto r = rabi_scan_tpe(default_setup(), amps, 2);
  r.validate();
  const auto& xx = r.column("xx_intensity");
  const auto maxima = local_maxima(xx);
  ASSERT_GE(maxima.size(), 2u);
  const double pi_amp = tpe_pi_amplitude(default_setup(), r);
  EXPECT_NEAR(pi_amp, amps[maxima[0]], 0.05);
  EXPECT_GE(r.column("xx_peak_population")[maxima[0]], 0.9);
  const auto lo = std::min_element(xx.begin() + static_cast<long>(maxima[0]), xx.begin() + static_cast<long>(maxima[1]));
  EXPECT_LT(*lo, 0.5 * xx[maxima[0]]);
  EXPECT_GT(amps[static_cast<std::size_t>(lo - xx.begin())], pi_amp);
}

TEST(RabiTpe, CoarseGridIsRejected) {
  const std::vector<double> amps{0.0, 0.2, 0.4};
  const auto r = rabi_scan_tpe(default_setup(), amps);
  EXPECT_THROW(tpe_pi_amplitude(default_setup(), r), std::domain_error);
}

TEST(RabiTpe, PermutedGridPermutesOutput) {
  const std::vector<double> up{0.2, 0.6, 1.0, 1.4};
  const std::vector<double> down(up.rbegin(), up.rend());
  const auto a = rabi_scan_tpe(default_setup(), up);
  const auto b = rabi_scan_tpe(default_setup(), down, 3);
  for (std::size_t s = 0; s < a.series.size(); ++s)
    for (std::size_t i = 0; i < up.size(); ++i) EXPECT_EQ(a.series[s][i], b.series[s][up.size() - 1 - i]);
}

TEST(RabiTpe, NonMonotoneGridIsRejected) {
  const std::vector<double> amps{0.0, 0.5, 0.3};
  EXPECT_THROW(rabi_scan_tpe(default_setup(), amps), std::invalid_argument);
  const std::vector<double> empty;
  EXPECT_THROW(rabi_scan_tpe(default_setup(), empty), std::invalid_argument);
}

TEST(RabiTrigger, MinimumAtPi) {
  std::vector<double> areas = linspace(0.0, 3.0 * kPi, 31);
  const auto r = rabi_scan_trigger(calibrated(), areas);
  const auto& xx = r.column("xx_intensity");
  EXPECT_EQ(*std::max_element(xx.begin(), xx.end()), xx.front());
  const double pi_area = trigger_pi_area(calibrated(), r);
  EXPECT_NEAR(pi_area / kPi, 1.0, 0.05);
  // recovery toward a full rotation
  const std::size_t two_pi = 20;
  EXPECT_GT(xx[two_pi], 0.8 * xx.front());
}

TEST(DelayMap, OperatingPointAndLimits) {
  const std::vector<double> delays{0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0, 60.0, 100.0};
  const std::vector<double> areas{0.0, 0.5 * kPi, kPi, 1.5 * kPi};
  const auto map = delay_area_map(calibrated(), delays, areas, 2);
  Eigen::Index imax = 0, jmax = 0;
  const double best = map.detected.maxCoeff(&imax, &jmax);
  EXPECT_GE(map.detected(4, 2), 0.95 * best);
  EXPECT_LE(delays[static_cast<std::size_t>(imax)], 30.0);
  EXPECT_EQ(jmax, 2);
  for (Eigen::Index i = 0; i < map.detected.rows(); ++i) EXPECT_NEAR(map.detected(i, 0), map.tpe_only, 1e-9);
  // at fixed pi area the gain shrinks as XX empties before the trigger
  for (Eigen::Index i = 5; i + 1 < map.detected.rows(); ++i)
    EXPECT_GT(map.detected(i, 2), map.detected(i + 1, 2));
  const auto far = delay_area_map(calibrated(), std::vector<double>{3000.0}, areas);
  for (Eigen::Index j = 0; j < far.detected.cols(); ++j)
    EXPECT_NEAR(far.detected(0, j), far.tpe_only, 0.01 * far.tpe_only);
}

TEST(DelayMap, TpeOnlyIsHalfOfBiexcitonEmission) {
  auto s = calibrated();
  s.trigger_enabled = false;
  const auto e = emission_integral(s);
  const double detected = e.emitted(s.detection_operator());
  EXPECT_NEAR(detected, 0.5 * e.biexciton_total(), 0.01);
  EXPECT_NEAR(detected, 0.5 * e.xx_peak_population, 0.05 * detected);
}

TEST(PolScan, VerticalIsMaximum) {
  const auto angles = linspace(0.0, 180.0, 19);
  const auto r = polarization_scan(calibrated(), angles, 2);
  const auto& d = r.column("detected");
  const auto hi = std::max_element(d.begin(), d.end()) - d.begin();
  const auto lo = std::min_element(d.begin(), d.end()) - d.begin();
  EXPECT_EQ(angles[static_cast<std::size_t>(hi)], 90.0);
  EXPECT_TRUE(angles[static_cast<std::size_t>(lo)] == 0.0 || angles[static_cast<std::size_t>(lo)] == 180.0);
  EXPECT_GE(d[static_cast<std::size_t>(hi)] / d[static_cast<std::size_t>(lo)], 10.0);

  auto field = calibrated();
  field.scheme.b_field_t = 1.0;
  EXPECT_THROW(polarization_scan(field, angles), std::invalid_argument);
}

TEST(PolScan, NoPrecessionLimitIsMalus) {
  auto s = calibrated();
  s.scheme.fss_uev = 0.0;
  s.rates.gamma_x = 0.5;
  s.tpe_peak_rabi = calibrate_tpe_pi(s);
  const auto angles = linspace(0.0, 180.0, 13);
  const auto d = polarization_scan(s, angles).column("detected");
  const double lo = *std::min_element(d.begin(), d.end());
  const double hi = *std::max_element(d.begin(), d.end());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double c = std::cos((angles[i] - 90.0) * kPi / 180.0);
    EXPECT_NEAR((d[i] - lo) / (hi - lo), c * c, 0.02) << angles[i];
  }
}

TEST(Magneto, WrapsLevelModel) {
  const auto fields = linspace(0.0, 4.0, 9);
  const auto r = magneto_map(LevelScheme{}, fields);
  r.validate();
  const auto& xa = r.column("xa_mev");
  const auto& xb = r.column("xb_mev");
  EXPECT_NEAR(std::abs(xa[0] - xb[0]), 5.9e-3, 1e-9);
  EXPECT_NEAR(std::abs(xa[8] - xb[8]), 0.7200272, 1e-6);
  const auto& det = r.column("tpe_detuning_xb_mev");
  EXPECT_NEAR(std::abs(det[8]), 0.81, 0.01);
  EXPECT_THROW(r.column("nope"), std::out_of_range);
}

TEST(Efficiency, IdealPreparation) {
  auto s = default_setup();
  const auto traj = evolve(pure_state(Level::Xb), s.scheme, PulseTrain{}, s.rates, TimeGrid{0.0, 300.0, 301});
  EXPECT_NEAR(excitation_efficiency(traj, s.detection_operator()), 1.0, 1e-6);
}

TEST(Efficiency, DoublePulseDefaults) {
  const double eta = excitation_efficiency(calibrated());
  EXPECT_GE(eta, 0.9);
  EXPECT_LE(eta, 1.0);
  const auto stats = photon_statistics(calibrated());
  EXPECT_NEAR(stats.efficiency, eta, 2e-3);
}

TEST(Efficiency, EmissionIntegralIsStepIndependent) {
  const auto a = emission_integral(calibrated(), 0.2);
  const auto b = emission_integral(calibrated(), 0.1);
  const auto sigma = calibrated().detection_operator();
  EXPECT_NEAR(a.emitted(sigma), b.emitted(sigma), 1e-6);
  EXPECT_NEAR(a.exciton_total(), b.exciton_total(), 1e-6);
}

TEST(Stokes, ZeroFieldEmissionIsMostlyVertical) {
  const auto s = emission_stokes(calibrated());
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_LT(s[1], -0.8);
  EXPECT_LE(s.tail<3>().norm(), 1.0 + 1e-9);
}

TEST(Setup, Validation) {
  auto s = default_setup();
  s.tpe_fwhm_ps = -1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = default_setup();
  s.rates.gamma_x = -1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Setup, FieldDefaults) {
  const auto s = default_setup(4.0);
  EXPECT_NEAR(1.0 / s.rates.gamma_x, 224.0, 1e-9);
  EXPECT_EQ(s.trigger_delay_ps, 15.0);
  EXPECT_EQ(s.trigger_polarization, jones_sigma_plus());
  EXPECT_EQ(s.analyzer, jones_sigma_minus());
}

TEST(Dephasing, CalibrationHitsTarget) {
  auto zero = default_setup();
  zero.tpe_peak_rabi = 0.8818;
  auto high = default_setup(4.0);
  high.tpe_peak_rabi = calibrate_tpe_pi(high);
  const QrtGrid grid{200, 0.0};
  const auto c = calibrate_dephasing(zero, high, 0.75, grid);
  EXPECT_NEAR(c.m_zero_field, 0.75, 2e-3);
  EXPECT_GT(c.gamma_deph, 0.0);
  EXPECT_LT(c.m_zero_field_tpe_only, c.m_zero_field);
  EXPECT_GT(c.m_high_field, c.m_zero_field);
  EXPECT_THROW(calibrate_dephasing(zero, high, 0.999, grid), std::domain_error);
  EXPECT_THROW(calibrate_dephasing(zero, high, 1.5, grid), std::invalid_argument);
}
