#include "dpe/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "dpe/csv.hpp"
#include "dpe/parallel.hpp"
#include "dpe/units.hpp"

namespace dpe {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool unit_norm(const JonesVector& v) { return std::abs(v.norm() - 1.0) <= 1e-9; }

// Composite Simpson weights; a 3/8 panel closes an even point count.
std::vector<double> quadrature_weights(std::size_t n, double dt) {
  std::vector<double> w(n, 0.0);
  if (n < 2) return w;
  if (n == 2) {
    w[0] = w[1] = 0.5 * dt;
    return w;
  }
  const std::size_t simpson_end = (n % 2 == 1) ? n - 1 : n - 4;  // last index of the Simpson part
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
    w[i] += dt / 3.0;
    w[i + 1] += 4.0 * dt / 3.0;
    w[i + 2] += dt / 3.0;
  }
  if (n % 2 == 0) {
    const double c = 3.0 * dt / 8.0;
    w[n - 4] += c;
    w[n - 3] += 3.0 * c;
    w[n - 2] += 3.0 * c;
    w[n - 1] += c;
  }
  return w;
}

std::vector<std::pair<std::string, std::string>> setup_metadata(const ExcitationSetup& s) {
  auto f = [](double v) { return csv::format(v); };
  return {{"b_field_t", f(s.scheme.b_field_t)},
          {"gamma_xx_per_ps", f(s.rates.gamma_xx)},
          {"gamma_x_per_ps", f(s.rates.gamma_x)},
          {"gamma_deph_per_ps", f(s.rates.gamma_deph)},
          {"tpe_peak_rabi", f(s.tpe_peak_rabi)},
          {"tpe_fwhm_ps", f(s.tpe_fwhm_ps)},
          {"trigger_enabled", s.trigger_enabled ? "true" : "false"},
          {"trigger_delay_ps", f(s.trigger_delay_ps)},
          {"trigger_fwhm_ps", f(s.trigger_fwhm_ps)},
          {"trigger_area_rad", f(s.trigger_area_rad)}};
}

void check_axis(std::span<const double> axis, const char* who) {
  if (axis.empty()) throw std::invalid_argument(std::string(who) + ": empty grid");
  bool up = true, down = true;
  for (std::size_t i = 1; i < axis.size(); ++i) {
    up = up && axis[i] > axis[i - 1];
    down = down && axis[i] < axis[i - 1];
  }
  if (axis.size() > 1 && !up && !down)
    throw std::invalid_argument(std::string(who) + ": grid must be strictly monotone");
}

// Index of the first interior local extremum in ascending-axis order.
std::size_t first_extremum(std::span<const double> axis, std::span<const double> v, bool maximum,
                           std::size_t* prev, std::size_t* next) {
  std::vector<std::size_t> order(axis.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return axis[a] < axis[b]; });
  const double sign = maximum ? 1.0 : -1.0;
  for (std::size_t k = 1; k + 1 < order.size(); ++k) {
    const double a = sign * v[order[k - 1]], b = sign * v[order[k]], c = sign * v[order[k + 1]];
    if (b > a && b >= c) {
      *prev = order[k - 1];
      *next = order[k + 1];
      return order[k];
    }
  }
  throw std::domain_error(std::string("scan grid does not bracket a ") + (maximum ? "maximum" : "minimum") +
                          "; refine or extend the grid");
}

double refine(double lo, double hi, bool maximum, const std::function<double(double)>& f) {
  const double sign = maximum ? -1.0 : 1.0;
  std::uintmax_t iters = 100;
  const auto r = boost::math::tools::brent_find_minima([&](double x) { return sign * f(x); }, lo, hi, 40, iters);
  return r.first;
}

}  // namespace

void ExcitationSetup::validate() const {
  scheme.validate();
  rates.validate();
  require(tpe_fwhm_ps > 0.0, "pulses.tpe_fwhm_ps: must be > 0");
  require(tpe_peak_rabi >= 0.0, "pulses.tpe_amplitude: must be >= 0");
  require(unit_norm(tpe_polarization), "pulses.tpe_polarization: must be unit-norm");
  require(trigger_fwhm_ps > 0.0, "pulses.trigger_fwhm_ps: must be > 0");
  require(trigger_area_rad >= 0.0, "pulses.trigger_area_rad: must be >= 0");
  require(std::isfinite(trigger_delay_ps), "pulses.trigger_delay_ps: must be finite");
  require(unit_norm(trigger_polarization), "pulses.trigger_polarization: must be unit-norm");
  require(unit_norm(analyzer), "detection.analyzer: must be unit-norm");
  require(repetition_period_ps > 0.0, "pulses.repetition_period_ps: must be > 0");
  require(integrator.rtol > 0.0 && integrator.atol > 0.0, "integrator: tolerances must be > 0");
}

PulseTrain ExcitationSetup::pulse_train() const {
  const auto lasers = laser_energies(scheme, trigger_target);
  PulseTrain train;
  train.repetition_period_ps = repetition_period_ps;
  PulseSpec tpe;
  tpe.fwhm_ps = tpe_fwhm_ps;
  tpe.center_ps = tpe_center_ps;
  tpe.carrier_mev = lasers.tpe_mev;
  tpe.polarization = tpe_polarization;
  tpe.peak_rabi = tpe_peak_rabi;
  train.pulses.push_back(tpe);
  if (trigger_enabled) {
    PulseSpec trig;
    trig.fwhm_ps = trigger_fwhm_ps;
    trig.center_ps = tpe_center_ps + trigger_delay_ps;
    trig.carrier_mev = lasers.trigger_mev;
    trig.polarization = trigger_polarization;
    train.pulses.push_back(scale_to_area(trig, trigger_area_rad));
  }
  return train;
}

std::shared_ptr<const MasterEquation> ExcitationSetup::model() const {
  validate();
  return std::make_shared<const MasterEquation>(scheme, pulse_train(), rates, integrator);
}

Eigen::Matrix4cd ExcitationSetup::detection_operator() const { return emission_operator(scheme, analyzer); }

double ExcitationSetup::first_pulse_start() const {
  double t = tpe_center_ps - 5.0 * tpe_fwhm_ps;
  if (trigger_enabled) t = std::min(t, tpe_center_ps + trigger_delay_ps - 5.0 * trigger_fwhm_ps);
  return t;
}

double ExcitationSetup::last_pulse_end() const {
  double t = tpe_center_ps + 5.0 * tpe_fwhm_ps;
  if (trigger_enabled) t = std::max(t, tpe_center_ps + trigger_delay_ps + 5.0 * trigger_fwhm_ps);
  return t;
}

ExcitationSetup default_setup(double b_field_t) {
  ExcitationSetup s;
  s.scheme.b_field_t = b_field_t;
  if (b_field_t == 0.0) return s;
  s.rates.gamma_x = 1.0 / 224.0;
  s.trigger_delay_ps = 15.0;
  s.trigger_polarization = jones_sigma_plus();
  s.trigger_target = Branch::B;
  s.analyzer = jones_sigma_minus();
  return s;
}

double EmissionIntegral::emitted(const Eigen::Matrix4cd& sigma) const {
  return rates.gamma_x * (sigma.adjoint() * sigma * rho).trace().real();
}

double EmissionIntegral::exciton_total() const {
  return rates.gamma_x * (rho(1, 1).real() + rho(2, 2).real());
}

double EmissionIntegral::biexciton_total() const { return rates.gamma_xx * rho(3, 3).real(); }

Eigen::Matrix4cd integrated_density(const Trajectory& traj) {
  const auto& me = traj.model();
  const auto& r = me.rates();
  if (!(r.gamma_x > 0.0) || !(r.gamma_xx > 0.0))
    throw std::domain_error("emission integral: decay rates must be > 0 for a finite cycle");
  if (traj.times().back() < me.pulses_end())
    throw std::invalid_argument("emission integral: trajectory ends before the last pulse");

  const auto w = quadrature_weights(traj.size(), traj.dt());
  Eigen::Matrix4cd sum = Eigen::Matrix4cd::Zero();
  for (std::size_t i = 0; i < traj.size(); ++i) sum += w[i] * traj.states()[i];

  // Pulse-free tail: each element decays independently except the cascade
  // feeding of the exciton populations.
  const DensityMatrix& end = traj.states().back();
  const Eigen::Vector4d decay(0.0, r.gamma_x, r.gamma_x, r.gamma_xx);
  const Eigen::Vector4d excited(0.0, 1.0, 1.0, 1.0);
  const Eigen::Vector4d& det = me.detunings();
  Eigen::Matrix4cd tail = Eigen::Matrix4cd::Zero();
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) {
      if (m == n) continue;
      const double kappa = 0.5 * (decay[m] + decay[n]) + r.gamma_deph * (excited[m] + excited[n]);
      tail(m, n) = end(m, n) / std::complex<double>(kappa, det[m] - det[n]);
    }
  }
  tail(3, 3) = end(3, 3).real() / r.gamma_xx;
  tail(1, 1) = (end(1, 1).real() + 0.5 * end(3, 3).real()) / r.gamma_x;
  tail(2, 2) = (end(2, 2).real() + 0.5 * end(3, 3).real()) / r.gamma_x;
  Eigen::Matrix4cd out = sum + tail;
  out(0, 0) = 0.0;
  return out;
}

EmissionIntegral emission_integral(const ExcitationSetup& setup, double sample_step_ps) {
  const auto model = setup.model();
  const double t0 = setup.first_pulse_start();
  const double t1 = setup.last_pulse_end();
  int points = static_cast<int>(std::ceil((t1 - t0) / sample_step_ps)) + 1;
  if (points % 2 == 0) ++points;
  const auto traj = evolve(pure_state(Level::G), model, TimeGrid{t0, t1, points});
  EmissionIntegral e;
  e.rho = integrated_density(traj);
  e.xx_peak_population = traj.population(Level::XX).maxCoeff();
  e.rates = setup.rates;
  return e;
}

double excitation_efficiency(const Trajectory& traj, const Eigen::Matrix4cd& sigma) {
  const Eigen::Matrix4cd r = integrated_density(traj);
  return traj.model().rates().gamma_x * (sigma.adjoint() * sigma * r).trace().real();
}

double excitation_efficiency(const ExcitationSetup& setup) {
  return emission_integral(setup).emitted(setup.detection_operator());
}

const std::vector<double>& ScanResult::column(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return series[i];
  throw std::out_of_range("ScanResult: no series '" + std::string(name) + "'");
}

void ScanResult::validate() const {
  check_axis(axis, "ScanResult");
  if (names.size() != series.size()) throw std::invalid_argument("ScanResult: names and series differ");
  for (const auto& s : series)
    if (s.size() != axis.size()) throw std::invalid_argument("ScanResult: series length differs from axis");
}

namespace {

ScanResult make_scan(std::string axis_name, std::span<const double> axis, std::vector<std::string> names,
                     const ExcitationSetup& setup) {
  ScanResult r;
  r.axis_name = std::move(axis_name);
  r.axis.assign(axis.begin(), axis.end());
  r.series.assign(names.size(), std::vector<double>(axis.size(), 0.0));
  r.names = std::move(names);
  r.metadata = setup_metadata(setup);
  return r;
}

ExcitationSetup tpe_only(const ExcitationSetup& setup, double amplitude) {
  ExcitationSetup s = setup;
  s.trigger_enabled = false;
  s.tpe_peak_rabi = amplitude;
  return s;
}

ExcitationSetup with_trigger_area(const ExcitationSetup& setup, double area) {
  ExcitationSetup s = setup;
  s.trigger_enabled = true;
  s.trigger_area_rad = area;
  return s;
}

}  // namespace

ScanResult rabi_scan_tpe(const ExcitationSetup& setup, std::span<const double> amplitudes, int threads) {
  check_axis(amplitudes, "rabi_scan_tpe");
  auto r = make_scan("tpe_amplitude_rad_per_ps", amplitudes,
                     {"x_intensity", "xx_intensity", "xx_peak_population", "detected"}, setup);
  const auto sigma = setup.detection_operator();
  parallel_for(static_cast<int>(amplitudes.size()), threads, [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    const auto e = emission_integral(tpe_only(setup, amplitudes[k]));
    r.series[0][k] = e.exciton_total();
    r.series[1][k] = e.biexciton_total();
    r.series[2][k] = e.xx_peak_population;
    r.series[3][k] = e.emitted(sigma);
  });
  return r;
}

ScanResult rabi_scan_trigger(const ExcitationSetup& setup, std::span<const double> areas, int threads) {
  check_axis(areas, "rabi_scan_trigger");
  auto r = make_scan("trigger_area_rad", areas, {"xx_intensity", "detected", "x_intensity"}, setup);
  const auto sigma = setup.detection_operator();
  parallel_for(static_cast<int>(areas.size()), threads, [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    const auto e = emission_integral(with_trigger_area(setup, areas[k]));
    r.series[0][k] = e.biexciton_total();
    r.series[1][k] = e.emitted(sigma);
    r.series[2][k] = e.exciton_total();
  });
  return r;
}

std::vector<std::size_t> local_maxima(std::span<const double> v) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    if (v[i] > v[i - 1] && v[i] >= v[i + 1]) out.push_back(i);
  return out;
}

double tpe_pi_amplitude(const ExcitationSetup& setup, const ScanResult& scan) {
  std::size_t lo = 0, hi = 0;
  const auto& xx = scan.column("xx_intensity");
  first_extremum(scan.axis, xx, true, &lo, &hi);
  return refine(scan.axis[lo], scan.axis[hi], true,
                [&](double a) { return emission_integral(tpe_only(setup, a)).biexciton_total(); });
}

double trigger_pi_area(const ExcitationSetup& setup, const ScanResult& scan) {
  std::size_t lo = 0, hi = 0;
  const auto& xx = scan.column("xx_intensity");
  first_extremum(scan.axis, xx, false, &lo, &hi);
  return refine(scan.axis[lo], scan.axis[hi], false,
                [&](double a) { return emission_integral(with_trigger_area(setup, a)).biexciton_total(); });
}

double calibrate_tpe_pi(const ExcitationSetup& setup, double max_amplitude, int coarse_points) {
  if (!(max_amplitude > 0.0) || coarse_points < 3)
    throw std::invalid_argument("calibrate_tpe_pi: need a positive range and at least 3 points");
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(coarse_points, 0.0, max_amplitude);
  const auto scan = rabi_scan_tpe(setup, std::span<const double>(grid.data(), static_cast<std::size_t>(grid.size())));
  return tpe_pi_amplitude(setup, scan);
}

DelayAreaMap delay_area_map(const ExcitationSetup& setup, std::span<const double> delays,
                            std::span<const double> areas, int threads) {
  check_axis(delays, "delay_area_map");
  check_axis(areas, "delay_area_map");
  DelayAreaMap map;
  map.delays_ps.assign(delays.begin(), delays.end());
  map.areas_rad.assign(areas.begin(), areas.end());
  map.detected.resize(static_cast<Eigen::Index>(delays.size()), static_cast<Eigen::Index>(areas.size()));
  const auto sigma = setup.detection_operator();
  const int n = static_cast<int>(delays.size() * areas.size());
  parallel_for(n, threads, [&](int idx) {
    const auto i = static_cast<std::size_t>(idx) / areas.size();
    const auto j = static_cast<std::size_t>(idx) % areas.size();
    ExcitationSetup s = with_trigger_area(setup, areas[j]);
    s.trigger_delay_ps = delays[i];
    map.detected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = emission_integral(s).emitted(sigma);
  });
  map.tpe_only = emission_integral(tpe_only(setup, setup.tpe_peak_rabi)).emitted(sigma);
  return map;
}

ScanResult polarization_scan(const ExcitationSetup& setup, std::span<const double> angles, int threads) {
  if (setup.scheme.b_field_t != 0.0)
    throw std::invalid_argument("polarization_scan: defined at zero magnetic field only");
  check_axis(angles, "polarization_scan");
  auto r = make_scan("trigger_angle_deg", angles, {"detected"}, setup);
  const auto sigma = setup.detection_operator();
  parallel_for(static_cast<int>(angles.size()), threads, [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    ExcitationSetup s = setup;
    s.trigger_enabled = true;
    s.trigger_polarization = jones_linear(angles[k]);
    r.series[0][k] = emission_integral(s).emitted(sigma);
  });
  return r;
}

ScanResult magneto_map(const LevelScheme& scheme, std::span<const double> fields) {
  check_axis(fields, "magneto_map");
  ScanResult r;
  r.axis_name = "b_field_t";
  r.axis.assign(fields.begin(), fields.end());
  r.names = {"xa_mev", "xb_mev", "xx_to_xa_mev", "xx_to_xb_mev", "tpe_mev", "trigger_mev", "tpe_detuning_xb_mev"};
  r.series.assign(r.names.size(), std::vector<double>(fields.size()));
  for (std::size_t k = 0; k < fields.size(); ++k) {
    LevelScheme s = scheme;
    s.b_field_t = fields[k];
    s.validate();
    const auto t = transitions(s);
    const auto lasers = laser_energies(s, Branch::B);
    for (std::size_t j = 0; j < 4; ++j) r.series[j][k] = t[j].energy_mev;
    r.series[4][k] = lasers.tpe_mev;
    r.series[5][k] = lasers.trigger_mev;
    r.series[6][k] = lasers.tpe_mev - t[1].energy_mev;
  }
  r.metadata = {{"g_factor", csv::format(scheme.g_factor)},
                {"diamagnetic_uev_per_t2", csv::format(scheme.diamagnetic_uev_per_t2)},
                {"zeeman_sign", std::to_string(scheme.zeeman_sign)}};
  return r;
}

StokesVector emission_stokes(const ExcitationSetup& setup) {
  const auto e = emission_integral(setup);
  auto I = [&](const JonesVector& a) { return e.emitted(emission_operator(setup.scheme, a)); };
  const double h = I(jones_h()), v = I(jones_v());
  const double d = I(jones_linear(45.0)), a = I(jones_linear(135.0));
  const double rc = I(jones_sigma_plus()), lc = I(jones_sigma_minus());
  const double s0 = h + v;
  if (!(s0 > 0.0)) throw std::domain_error("emission_stokes: no exciton emission");
  return StokesVector(1.0, (h - v) / s0, (d - a) / s0, (rc - lc) / s0);
}

Trajectory cycle_trajectory(const ExcitationSetup& setup, const QrtGrid& grid) {
  if (grid.points < 3) throw std::invalid_argument("grid.points: need at least 3");
  const double t0 = std::min(0.0, setup.first_pulse_start());
  const double span = grid.span_ps > 0.0
                          ? grid.span_ps
                          : (setup.last_pulse_end() - t0) + 5.0 * (1.0 / setup.rates.gamma_x + 1.0 / setup.rates.gamma_xx);
  return evolve(pure_state(Level::G), setup.model(), TimeGrid{t0, t0 + span, grid.points});
}

PhotonStatistics photon_statistics(const ExcitationSetup& setup, const QrtGrid& grid, int threads) {
  const auto traj = cycle_trajectory(setup, grid);
  const auto sigma = setup.detection_operator();
  const auto c = two_time_correlations(traj, sigma, TauGrid{}, threads);
  return {g2_zero_pulsed(c), hom_indistinguishability(c), excitation_efficiency(traj, sigma)};
}

DephasingCalibration calibrate_dephasing(const ExcitationSetup& zero_field, const ExcitationSetup& high_field,
                                         double target, const QrtGrid& grid, int threads) {
  if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("calibration target must be in (0, 1)");
  int evaluations = 0;
  auto overlap = [&](const ExcitationSetup& base, double gamma, bool trigger) {
    ExcitationSetup s = base;
    s.rates.gamma_deph = gamma;
    s.trigger_enabled = trigger;
    ++evaluations;
    return photon_statistics(s, grid, threads).indistinguishability;
  };
  auto f = [&](double g) { return overlap(zero_field, g, true) - target; };
  const double lo = 0.0, hi = zero_field.rates.gamma_x;
  const double f_lo = f(lo), f_hi = f(hi);
  if (f_lo < 0.0) throw std::domain_error("calibrate_dephasing: target exceeds the dephasing-free overlap");
  if (f_hi > 0.0) throw std::domain_error("calibrate_dephasing: target below the bracket");
  std::uintmax_t iters = 60;
  const auto root = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi,
                                                      boost::math::tools::eps_tolerance<double>(30), iters);
  const double gamma = 0.5 * (root.first + root.second);

  DephasingCalibration c;
  c.gamma_deph = gamma;
  c.m_zero_field = overlap(zero_field, gamma, true);
  c.m_zero_field_tpe_only = overlap(zero_field, gamma, false);
  c.m_high_field = overlap(high_field, gamma, true);
  c.m_high_field_tpe_only = overlap(high_field, gamma, false);
  c.evaluations = evaluations;
  return c;
}

}  // namespace dpe
