#include "dpe/lindblad.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "dpe/units.hpp"

namespace dpe {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

// Invariant breaches beyond these bounds abort an evolution.
constexpr double kTraceAbort = 1e-6;
constexpr double kHermiticityAbort = 1e-8;
constexpr double kEigenAbort = -1e-6;

}  // namespace

void DecayRates::validate() const {
  if (!(gamma_xx >= 0.0)) throw std::invalid_argument("rates.xx_lifetime_ps: decay rate must be >= 0");
  if (!(gamma_x >= 0.0)) throw std::invalid_argument("rates.x_lifetime_ps: decay rate must be >= 0");
  if (!(gamma_deph >= 0.0)) throw std::invalid_argument("rates.dephasing_per_ps: must be >= 0");
}

Eigen::Matrix4d CollapseOp::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(index(to), index(from)) = std::sqrt(rate);
  return m;
}

std::vector<CollapseOp> collapse_operators(const DecayRates& r) {
  return {
      {Level::Xa, Level::XX, 0.5 * r.gamma_xx}, {Level::Xb, Level::XX, 0.5 * r.gamma_xx},
      {Level::G, Level::Xa, r.gamma_x},         {Level::G, Level::Xb, r.gamma_x},
      {Level::Xa, Level::Xa, 2.0 * r.gamma_deph}, {Level::Xb, Level::Xb, 2.0 * r.gamma_deph},
      {Level::XX, Level::XX, 2.0 * r.gamma_deph},
  };
}

DensityDiagnostics diagnose(const DensityMatrix& rho) {
  DensityDiagnostics d;
  d.trace_error = std::abs(rho.trace() - 1.0);
  d.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  const Eigen::Matrix4cd herm = 0.5 * (rho + rho.adjoint());
  d.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd>(herm, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .minCoeff();
  return d;
}

MasterEquation::MasterEquation(LevelScheme scheme, PulseTrain pulses, DecayRates rates,
                               IntegratorOptions options)
    : scheme_(scheme), pulses_(std::move(pulses)), rates_(rates), options_(options) {
  scheme_.validate();
  pulses_.validate();
  rates_.validate();

  const auto e = level_energies(scheme_);
  frame_mev_ = laser_energies(scheme_).tpe_mev;
  detunings_ << 0.0, units::mev_to_rad_per_ps(e[1] - frame_mev_),
      units::mev_to_rad_per_ps(e[2] - frame_mev_), units::mev_to_rad_per_ps(e[3] - 2.0 * frame_mev_);

  decay_diag_.setZero();
  for (const auto& op : collapse_operators(rates_)) decay_diag_[index(op.from)] += op.rate;

  const Basis basis = scheme_.basis();
  pulse_cap_ = std::numeric_limits<double>::infinity();
  for (const auto& p : pulses_.pulses) {
    if (p.peak_rabi == 0.0) continue;
    Drive d;
    d.pulse = p;
    d.phase_rate = units::mev_to_rad_per_ps(p.carrier_mev - frame_mev_);
    for (int j = 0; j < 2; ++j) {
      const Branch b = j == 0 ? Branch::A : Branch::B;
      d.ground_coupling[j] = ground_dipole(basis, b).dot(p.polarization);
      d.biexciton_coupling[j] = biexciton_dipole(basis, b).dot(p.polarization);
    }
    drives_.push_back(d);
    pulse_cap_ = std::min(pulse_cap_, p.fwhm_ps / 20.0);
  }
  if (options_.max_step_ps > 0.0) pulse_cap_ = options_.max_step_ps;
}

Eigen::Matrix4cd MasterEquation::hamiltonian(double t) const {
  Eigen::Matrix4cd h = detunings_.cast<std::complex<double>>().asDiagonal();
  for (const auto& d : drives_) {
    const double omega = envelope(d.pulse, t);
    if (omega == 0.0) continue;
    const std::complex<double> c = 0.5 * omega * std::exp(-kI * (d.phase_rate * t));
    for (int j = 0; j < 2; ++j) {
      const int x = 1 + j;
      const std::complex<double> g = c * d.ground_coupling[j];
      const std::complex<double> b = c * d.biexciton_coupling[j];
      h(x, 0) += g;
      h(0, x) += std::conj(g);
      h(3, x) += b;
      h(x, 3) += std::conj(b);
    }
  }
  return h;
}

Eigen::Matrix4cd build_hamiltonian(const LevelScheme& scheme, const PulseTrain& pulses, double t) {
  return MasterEquation(scheme, pulses, DecayRates{0.0, 0.0, 0.0}).hamiltonian(t);
}

Eigen::Matrix4cd MasterEquation::free_generator(const Eigen::Matrix4cd& x) const {
  Eigen::Matrix4cd out;
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i)
      out(i, j) = (-kI * (detunings_[i] - detunings_[j]) - 0.5 * (decay_diag_[i] + decay_diag_[j])) *
                  x(i, j);
  const double half_xx = 0.5 * rates_.gamma_xx;
  const double deph = 2.0 * rates_.gamma_deph;
  out(1, 1) += half_xx * x(3, 3) + deph * x(1, 1);
  out(2, 2) += half_xx * x(3, 3) + deph * x(2, 2);
  out(3, 3) += deph * x(3, 3);
  out(0, 0) += rates_.gamma_x * (x(1, 1) + x(2, 2));
  return out;
}

Eigen::Matrix4cd MasterEquation::generator(double t, const Eigen::Matrix4cd& x) const {
  Eigen::Matrix4cd out = free_generator(x);
  if (drives_.empty()) return out;
  // Only the drive part of H is off-diagonal; the diagonal is already in out.
  Eigen::Matrix4cd v = hamiltonian(t);
  v.diagonal().setZero();
  out.noalias() += -kI * (v * x - x * v);
  return out;
}

Superoperator MasterEquation::free_superoperator() const {
  Superoperator s;
  for (int k = 0; k < 16; ++k) {
    Eigen::Matrix4cd basis = Eigen::Matrix4cd::Zero();
    basis(k % 4, k / 4) = 1.0;
    const Eigen::Matrix4cd col = free_generator(basis);
    s.col(k) = Eigen::Map<const Eigen::Matrix<std::complex<double>, 16, 1>>(col.data());
  }
  return s;
}

Superoperator MasterEquation::free_propagator(double dt) const {
  return (free_superoperator() * dt).exp();
}

bool MasterEquation::pulses_active(double t0, double t1) const {
  for (const auto& d : drives_) {
    const double hw = support_half_width(d.pulse);
    if (t1 >= d.pulse.center_ps - hw && t0 <= d.pulse.center_ps + hw) return true;
  }
  return false;
}

double MasterEquation::pulses_end() const {
  double end = -std::numeric_limits<double>::infinity();
  for (const auto& d : drives_) end = std::max(end, d.pulse.center_ps + support_half_width(d.pulse));
  return end;
}

double MasterEquation::max_step(double t) const {
  // Look one cap ahead so a long step cannot jump over the onset of a pulse.
  if (drives_.empty()) return std::numeric_limits<double>::infinity();
  double next_start = std::numeric_limits<double>::infinity();
  for (const auto& d : drives_) {
    const double start = d.pulse.center_ps - support_half_width(d.pulse);
    const double stop = d.pulse.center_ps + support_half_width(d.pulse);
    if (t >= start && t <= stop) return pulse_cap_;
    if (start > t) next_start = std::min(next_start, start);
  }
  return std::max(next_start - t, pulse_cap_);
}

Eigen::Matrix4cd MasterEquation::propagate(const Eigen::Matrix4cd& x, double t0, double t1) const {
  if (t1 <= t0) return x;
  if (!pulses_active(t0, t1)) {
    const Superoperator p = free_propagator(t1 - t0);
    Eigen::Matrix4cd out;
    Eigen::Map<Eigen::Matrix<std::complex<double>, 16, 1>>(out.data()) =
        p * Eigen::Map<const Eigen::Matrix<std::complex<double>, 16, 1>>(x.data());
    return out;
  }
  DormandPrince<Eigen::Matrix4cd> stepper({options_.rtol, options_.atol});
  Eigen::Matrix4cd y = x;
  double t = t0;
  double h = 0.0;
  stepper.advance([this](double tt, const Eigen::Matrix4cd& yy) { return generator(tt, yy); }, y, t,
                  t1, h, [this](double tt) { return max_step(tt); });
  return y;
}

void TimeGrid::validate() const {
  if (points < 2) throw std::invalid_argument("time grid: need at least 2 points");
  if (!(t1 > t0)) throw std::invalid_argument("time grid: end must exceed start");
}

Trajectory::Trajectory(std::shared_ptr<const MasterEquation> model, std::vector<double> times,
                       std::vector<DensityMatrix> states)
    : model_(std::move(model)), times_(std::move(times)), states_(std::move(states)) {
  if (times_.size() != states_.size())
    throw std::invalid_argument("Trajectory: times and states differ in length");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1]))
      throw std::invalid_argument("Trajectory: time grid must be strictly increasing");
}

Eigen::VectorXd Trajectory::population(Level level) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i)
    out[static_cast<Eigen::Index>(i)] = states_[i](index(level), index(level)).real();
  return out;
}

Eigen::VectorXd Trajectory::expectation(const Eigen::Matrix4cd& op) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i)
    out[static_cast<Eigen::Index>(i)] = (op * states_[i]).trace().real();
  return out;
}

Trajectory evolve(const DensityMatrix& rho0, std::shared_ptr<const MasterEquation> model,
                  const TimeGrid& grid) {
  grid.validate();
  const auto d0 = diagnose(rho0);
  if (d0.trace_error > 1e-8 || d0.hermiticity_error > 1e-10 || d0.min_eigenvalue < -1e-8)
    throw std::invalid_argument("evolve: initial state is not a valid density matrix");

  const auto& me = *model;
  DormandPrince<Eigen::Matrix4cd> stepper({me.options().rtol, me.options().atol});
  auto rhs = [&me](double t, const Eigen::Matrix4cd& y) { return me.generator(t, y); };
  auto cap = [&me](double t) { return me.max_step(t); };

  std::vector<double> times;
  std::vector<DensityMatrix> states;
  times.reserve(static_cast<std::size_t>(grid.points));
  states.reserve(static_cast<std::size_t>(grid.points));

  DensityMatrix rho = rho0;
  double t = grid.t0;
  double h = 0.0;
  for (int i = 0; i < grid.points; ++i) {
    const double target = grid.at(i);
    stepper.advance(rhs, rho, t, target, h, cap);
    const auto d = diagnose(rho);
    if (d.trace_error > kTraceAbort || d.hermiticity_error > kHermiticityAbort ||
        d.min_eigenvalue < kEigenAbort)
      throw InvariantError("evolve: density-matrix invariant breached at t = " +
                           std::to_string(target) + " ps (trace error " +
                           std::to_string(d.trace_error) + ", min eigenvalue " +
                           std::to_string(d.min_eigenvalue) + ")");
    times.push_back(target);
    states.push_back(rho);
  }
  return Trajectory(std::move(model), std::move(times), std::move(states));
}

Trajectory evolve(const DensityMatrix& rho0, const LevelScheme& scheme, const PulseTrain& pulses,
                  const DecayRates& rates, const TimeGrid& grid, IntegratorOptions options) {
  return evolve(rho0, std::make_shared<const MasterEquation>(scheme, pulses, rates, options), grid);
}

DensityMatrix pure_state(Level level) {
  DensityMatrix rho = DensityMatrix::Zero();
  rho(index(level), index(level)) = 1.0;
  return rho;
}

std::array<double, 6> coherence_magnitudes(const DensityMatrix& rho) {
  return {std::abs(rho(0, 1)), std::abs(rho(0, 2)), std::abs(rho(0, 3)),
          std::abs(rho(1, 2)), std::abs(rho(1, 3)), std::abs(rho(2, 3))};
}

}  // namespace dpe
