#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "dpe/ode.hpp"
#include "dpe/pulses.hpp"
#include "dpe/qd_model.hpp"

namespace dpe {

using DensityMatrix = Eigen::Matrix4cd;
/// Column-major vectorization of a 4x4 operator acts on 16-vectors.
using Superoperator = Eigen::Matrix<std::complex<double>, 16, 16>;

class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DecayRates {
  double gamma_xx = 1.0 / 250.0;  // total XX decay, split equally between branches
  double gamma_x = 1.0 / 394.0;   // per exciton branch
  double gamma_deph = 0.0;        // pure dephasing of X_a, X_b and XX

  void validate() const;
};

/// L = sqrt(rate) |to><from|.
struct CollapseOp {
  Level to;
  Level from;
  double rate;

  Eigen::Matrix4d matrix() const;
};

std::vector<CollapseOp> collapse_operators(const DecayRates& rates);

struct IntegratorOptions {
  double rtol = 1e-8;
  double atol = 1e-12;
  /// <= 0 selects min(fwhm) / 20 inside pulse windows.
  double max_step_ps = 0.0;
};

struct DensityDiagnostics {
  double trace_error;
  double hermiticity_error;
  double min_eigenvalue;
};

DensityDiagnostics diagnose(const DensityMatrix& rho);

/// Rotating-frame Hamiltonian (rad/ps) in the frame of the TPE carrier.
Eigen::Matrix4cd build_hamiltonian(const LevelScheme& scheme, const PulseTrain& pulses, double t_ps);

/// Driven four-level master equation. Immutable once built.
class MasterEquation {
 public:
  MasterEquation(LevelScheme scheme, PulseTrain pulses, DecayRates rates,
                 IntegratorOptions options = {});

  const LevelScheme& scheme() const { return scheme_; }
  const PulseTrain& pulses() const { return pulses_; }
  const DecayRates& rates() const { return rates_; }
  const IntegratorOptions& options() const { return options_; }

  /// Frame energy (meV): the TPE carrier.
  double frame_energy_mev() const { return frame_mev_; }
  /// Diagonal of H with all pulses off (rad/ps).
  const Eigen::Vector4d& detunings() const { return detunings_; }

  Eigen::Matrix4cd hamiltonian(double t) const;

  /// Lindblad generator applied to an arbitrary (not necessarily Hermitian)
  /// operator. Linear in x.
  Eigen::Matrix4cd generator(double t, const Eigen::Matrix4cd& x) const;
  Eigen::Matrix4cd free_generator(const Eigen::Matrix4cd& x) const;

  /// 16x16 matrix of the pulse-free generator.
  Superoperator free_superoperator() const;
  /// exp(L_free * dt).
  Superoperator free_propagator(double dt) const;

  bool pulses_active(double t0, double t1) const;
  /// Latest time at which any pulse is switched on (-inf without pulses).
  double pulses_end() const;
  double max_step(double t) const;

  /// Linear propagation of x from t0 to t1, without density-matrix checks.
  Eigen::Matrix4cd propagate(const Eigen::Matrix4cd& x, double t0, double t1) const;

 private:
  struct Drive {
    double phase_rate;  // rad/ps relative to the frame
    PulseSpec pulse;
    Eigen::Vector2cd ground_coupling;     // <d_j|e> for G <-> X_j
    Eigen::Vector2cd biexciton_coupling;  // <d_j|e> for X_j <-> XX
  };

  LevelScheme scheme_;
  PulseTrain pulses_;
  DecayRates rates_;
  IntegratorOptions options_;
  double frame_mev_;
  Eigen::Vector4d detunings_;
  Eigen::Vector4d decay_diag_;  // diagonal of sum_k L_k^dagger L_k
  std::vector<Drive> drives_;
  double pulse_cap_;
};

struct TimeGrid {
  double t0 = 0.0;
  double t1 = 0.0;
  int points = 2;

  double step() const { return (t1 - t0) / (points - 1); }
  double at(int i) const { return i == points - 1 ? t1 : t0 + i * step(); }
  void validate() const;
};

/// Time series of the density matrix on a uniform grid.
class Trajectory {
 public:
  Trajectory(std::shared_ptr<const MasterEquation> model, std::vector<double> times,
             std::vector<DensityMatrix> states);

  const MasterEquation& model() const { return *model_; }
  std::shared_ptr<const MasterEquation> model_ptr() const { return model_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<DensityMatrix>& states() const { return states_; }
  std::size_t size() const { return times_.size(); }
  double dt() const { return times_.size() > 1 ? times_[1] - times_[0] : 0.0; }

  Eigen::VectorXd population(Level level) const;
  /// Tr[op * rho(t)] for every sample.
  Eigen::VectorXd expectation(const Eigen::Matrix4cd& op) const;

 private:
  std::shared_ptr<const MasterEquation> model_;
  std::vector<double> times_;
  std::vector<DensityMatrix> states_;
};

Trajectory evolve(const DensityMatrix& rho0, std::shared_ptr<const MasterEquation> model,
                  const TimeGrid& grid);

Trajectory evolve(const DensityMatrix& rho0, const LevelScheme& scheme, const PulseTrain& pulses,
                  const DecayRates& rates, const TimeGrid& grid, IntegratorOptions options = {});

DensityMatrix pure_state(Level level);

/// Upper-triangle coherence magnitudes |rho_ij|, i < j, in (G,Xa,Xb,XX) order.
std::array<double, 6> coherence_magnitudes(const DensityMatrix& rho);

}  // namespace dpe
