#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dpe/histogram.hpp"
#include "dpe/lindblad.hpp"

namespace dpe {

/// Gaussian instrument response.
struct IRF {
  double fwhm_ps = 60.0;
  void validate() const;
};

inline constexpr double kSnspdIrfFwhmPs = 60.0;
inline constexpr double kSpadIrfFwhmPs = 427.0;

/// sigma_e = sum_j <e|d_j> |G><X_j|: X -> G emission through an analyzer.
Eigen::Matrix4cd emission_operator(const LevelScheme& scheme, const JonesVector& analyzer);
/// |G><X_branch|
Eigen::Matrix4cd emission_operator(Branch branch);

enum class CorrelationKind { G1, G2 };

struct TwoTimeGrid {
  CorrelationKind kind;
  Eigen::VectorXd t;
  Eigen::VectorXd tau;
  Eigen::MatrixXcd values;  // rows: t, cols: tau
};

struct TauGrid {
  double span_ps = 0.0;  // <= 0: same span as the trajectory
  int points = 0;        // <= 0: same point count as the trajectory
};

/// All two-time quantities needed by the pulsed purity and overlap estimators.
struct TwoTimeCorrelations {
  Eigen::VectorXd t;
  Eigen::VectorXd tau;
  Eigen::MatrixXcd g1;      // Tr[s^+ L(s rho(t))]
  Eigen::MatrixXd g2;       // Tr[s^+ s L(s rho(t) s^+)]
  Eigen::MatrixXd n_delay;  // n(t + tau)
  Eigen::VectorXd n;        // n(t)
};

/// Quantum-regression propagation for every trajectory sample. The tau
/// evolution uses the full time-dependent generator while pulses are on and
/// the exact pulse-free propagator otherwise.
TwoTimeCorrelations two_time_correlations(const Trajectory& traj, const Eigen::Matrix4cd& sigma,
                                          TauGrid tau = {}, int threads = 1);

TwoTimeGrid g1_grid(const Trajectory& traj, const Eigen::Matrix4cd& sigma, TauGrid tau = {},
                    int threads = 1);
TwoTimeGrid g2_grid(const Trajectory& traj, const Eigen::Matrix4cd& sigma, TauGrid tau = {},
                    int threads = 1);

/// Pulsed g2[0]: centre-peak area over side-peak area.
double g2_zero_pulsed(const TwoTimeCorrelations& c);
double g2_zero_pulsed(const Trajectory& traj, const Eigen::Matrix4cd& sigma, TauGrid tau = {},
                      int threads = 1);

/// Mean wave-packet overlap.
double hom_indistinguishability(const TwoTimeCorrelations& c);
double hom_indistinguishability(const Trajectory& traj, const Eigen::Matrix4cd& sigma,
                                TauGrid tau = {}, int threads = 1);

struct DecayTrace {
  Eigen::VectorXd t;          // ps, extended by the IRF padding
  Eigen::VectorXd intensity;  // photons / ps after IRF convolution
  double rise_ps;             // 1/e-of-maximum crossing on the rising edge to the maximum
  double peak_ps;
};

/// Gaussian convolution on an extended uniform grid; preserves the sum exactly.
DecayTrace convolve_irf(const Eigen::VectorXd& t, const Eigen::VectorXd& rate, const IRF& irf);
double rise_metric(const Eigen::VectorXd& t, const Eigen::VectorXd& y, double* peak_time = nullptr);

DecayTrace pl_decay_trace(const Trajectory& traj, const Eigen::Matrix4cd& sigma, const IRF& irf);

struct HistogramSynthesis {
  double g2 = 0.0;
  double v_raw = 0.0;
  double side_area = 1e4;
  int n_side_peaks = 3;  // per side
  double rep_period_ps = 12500.0;
  double lifetime_ps = 394.0;
  double bin_width_ps = 4.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct HistogramSet {
  CoincidenceHistogram hbt;
  CoincidenceHistogram hom_co;
  CoincidenceHistogram hom_cross;
};

HistogramSet synthesize_histograms(const HistogramSynthesis& synth);

/// Expected (noise-free) counts of one histogram with the given centre-peak area.
std::vector<double> expected_counts(const HistogramSynthesis& synth, double center_area,
                                    std::vector<double>* centers = nullptr);

}  // namespace dpe
