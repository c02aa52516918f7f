#include "dpe/correlations.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "dpe/parallel.hpp"

namespace dpe {

namespace {

using Vec16 = Eigen::Matrix<std::complex<double>, 16, 1>;

// exp(-700) is close to the smallest normal double.
constexpr double kStabilityExponent = 700.0;

double trapezoid(const Eigen::VectorXd& y, double dx) {
  if (y.size() < 2) return 0.0;
  return dx * (y.sum() - 0.5 * (y[0] + y[y.size() - 1]));
}

template <typename Derived>
double trapezoid_2d(const Eigen::MatrixBase<Derived>& z, double dt, double dtau) {
  Eigen::VectorXd rows(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) rows[i] = trapezoid(z.row(i).transpose(), dtau);
  return trapezoid(rows, dt);
}

Eigen::Matrix4cd apply_superop(const Superoperator& p, const Eigen::Matrix4cd& x) {
  Eigen::Matrix4cd out;
  Eigen::Map<Vec16>(out.data()) = p * Eigen::Map<const Vec16>(x.data());
  return out;
}

}  // namespace

void IRF::validate() const {
  if (!(fwhm_ps > 0.0)) throw std::invalid_argument("detection.irf: must be > 0");
}

Eigen::Matrix4cd emission_operator(const LevelScheme& scheme, const JonesVector& analyzer) {
  Eigen::Matrix4cd s = Eigen::Matrix4cd::Zero();
  const Basis basis = scheme.basis();
  s(0, 1) = analyzer.dot(ground_dipole(basis, Branch::A));
  s(0, 2) = analyzer.dot(ground_dipole(basis, Branch::B));
  return s;
}

Eigen::Matrix4cd emission_operator(Branch branch) {
  Eigen::Matrix4cd s = Eigen::Matrix4cd::Zero();
  s(0, index(exciton_level(branch))) = 1.0;
  return s;
}

TwoTimeCorrelations two_time_correlations(const Trajectory& traj, const Eigen::Matrix4cd& sigma,
                                          TauGrid tau, int threads) {
  if (traj.size() < 2) throw std::invalid_argument("two_time_correlations: trajectory too short");
  const MasterEquation& me = traj.model();
  const double t_span = traj.times().back() - traj.times().front();
  const double span = tau.span_ps > 0.0 ? tau.span_ps : t_span;
  const int points = tau.points > 0 ? tau.points : static_cast<int>(traj.size());
  if (points < 2) throw std::invalid_argument("two_time_correlations: need at least 2 tau points");
  const double fastest = std::max(me.rates().gamma_x, me.rates().gamma_xx);
  if (span * fastest > kStabilityExponent)
    throw std::domain_error("two_time_correlations: tau span of " + std::to_string(span) +
                            " ps exceeds the numerical stability window");

  const double dtau = span / (points - 1);
  const Superoperator step = me.free_propagator(dtau);
  const Eigen::Matrix4cd sigma_dag = sigma.adjoint();
  const Eigen::Matrix4cd number = sigma_dag * sigma;

  const auto rows = static_cast<Eigen::Index>(traj.size());
  TwoTimeCorrelations c;
  c.t = Eigen::Map<const Eigen::VectorXd>(traj.times().data(), rows);
  c.tau = Eigen::VectorXd::LinSpaced(points, 0.0, span);
  c.g1.resize(rows, points);
  c.g2.resize(rows, points);
  c.n_delay.resize(rows, points);
  c.n = traj.expectation(number);

  parallel_for(static_cast<int>(rows), threads, [&](int i) {
    const DensityMatrix& rho = traj.states()[static_cast<std::size_t>(i)];
    Eigen::Matrix4cd x1 = sigma * rho;
    Eigen::Matrix4cd x2 = sigma * rho * sigma_dag;
    Eigen::Matrix4cd x0 = rho;
    const double t = traj.times()[static_cast<std::size_t>(i)];
    for (int k = 0; k < points; ++k) {
      if (k > 0) {
        const double s0 = t + (k - 1) * dtau;
        const double s1 = t + k * dtau;
        if (me.pulses_active(s0, s1)) {
          x1 = me.propagate(x1, s0, s1);
          x2 = me.propagate(x2, s0, s1);
          x0 = me.propagate(x0, s0, s1);
        } else {
          x1 = apply_superop(step, x1);
          x2 = apply_superop(step, x2);
          x0 = apply_superop(step, x0);
        }
      }
      c.g1(i, k) = (sigma_dag * x1).trace();
      c.g2(i, k) = (number * x2).trace().real();
      c.n_delay(i, k) = (number * x0).trace().real();
    }
  });
  return c;
}

TwoTimeGrid g1_grid(const Trajectory& traj, const Eigen::Matrix4cd& sigma, TauGrid tau, int threads) {
  auto c = two_time_correlations(traj, sigma, tau, threads);
  return {CorrelationKind::G1, std::move(c.t), std::move(c.tau), std::move(c.g1)};
}

TwoTimeGrid g2_grid(const Trajectory& traj, const Eigen::Matrix4cd& sigma, TauGrid tau, int threads) {
  auto c = two_time_correlations(traj, sigma, tau, threads);
  return {CorrelationKind::G2, std::move(c.t), std::move(c.tau), c.g2.cast<std::complex<double>>()};
}

double g2_zero_pulsed(const TwoTimeCorrelations& c) {
  const double dt = c.t[1] - c.t[0];
  const double dtau = c.tau[1] - c.tau[0];
  const double emitted = trapezoid(c.n, dt);
  if (!(emitted > 0.0)) throw std::domain_error("g2_zero_pulsed: no emission in the trajectory");
  // tau >= 0 only; the centre peak is symmetric in tau.
  return 2.0 * trapezoid_2d(c.g2, dt, dtau) / (emitted * emitted);
}

double g2_zero_pulsed(const Trajectory& traj, const Eigen::Matrix4cd& sigma, TauGrid tau,
                      int threads) {
  return g2_zero_pulsed(two_time_correlations(traj, sigma, tau, threads));
}

double hom_indistinguishability(const TwoTimeCorrelations& c) {
  const double dt = c.t[1] - c.t[0];
  const double dtau = c.tau[1] - c.tau[0];
  const Eigen::MatrixXd pair = c.n.asDiagonal() * c.n_delay;
  const double denom = trapezoid_2d(pair, dt, dtau);
  if (!(denom > 0.0)) throw std::domain_error("hom_indistinguishability: no emission in the trajectory");
  return trapezoid_2d(c.g1.cwiseAbs2(), dt, dtau) / denom;
}

double hom_indistinguishability(const Trajectory& traj, const Eigen::Matrix4cd& sigma, TauGrid tau,
                                int threads) {
  return hom_indistinguishability(two_time_correlations(traj, sigma, tau, threads));
}

double rise_metric(const Eigen::VectorXd& t, const Eigen::VectorXd& y, double* peak_time) {
  Eigen::Index imax = 0;
  const double ymax_sample = y.maxCoeff(&imax);
  double t_peak = t[imax];
  double ymax = ymax_sample;
  if (imax > 0 && imax + 1 < y.size()) {
    const double a = y[imax - 1], b = y[imax], c = y[imax + 1];
    const double den = a - 2.0 * b + c;
    if (den < 0.0) {
      const double shift = 0.5 * (a - c) / den;
      const double dt = t[1] - t[0];
      t_peak += shift * dt;
      ymax = b - 0.25 * (a - c) * shift;
    }
  }
  if (peak_time) *peak_time = t_peak;
  const double level = ymax / std::numbers::e;
  for (Eigen::Index i = imax; i > 0; --i) {
    if (y[i - 1] < level) {
      const double frac = (level - y[i - 1]) / (y[i] - y[i - 1]);
      return t_peak - (t[i - 1] + frac * (t[i] - t[i - 1]));
    }
  }
  return t_peak - t[0];
}

DecayTrace convolve_irf(const Eigen::VectorXd& t, const Eigen::VectorXd& rate, const IRF& irf) {
  irf.validate();
  if (t.size() < 2 || t.size() != rate.size())
    throw std::invalid_argument("convolve_irf: need matching time and intensity series");
  const double dt = t[1] - t[0];
  const double sigma = irf.fwhm_ps / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const auto half = static_cast<Eigen::Index>(std::ceil(6.0 * sigma / dt));
  Eigen::VectorXd kernel(2 * half + 1);
  for (Eigen::Index m = -half; m <= half; ++m) {
    const double x = m * dt / sigma;
    kernel[m + half] = std::exp(-0.5 * x * x);
  }
  kernel /= kernel.sum();

  const Eigen::Index n = t.size();
  DecayTrace out;
  out.t = Eigen::VectorXd::LinSpaced(n + 2 * half, t[0] - half * dt, t[n - 1] + half * dt);
  out.intensity = Eigen::VectorXd::Zero(n + 2 * half);
  for (Eigen::Index i = 0; i < n; ++i)
    out.intensity.segment(i, 2 * half + 1) += rate[i] * kernel;
  out.rise_ps = rise_metric(out.t, out.intensity, &out.peak_ps);
  return out;
}

DecayTrace pl_decay_trace(const Trajectory& traj, const Eigen::Matrix4cd& sigma, const IRF& irf) {
  const Eigen::VectorXd rate =
      traj.model().rates().gamma_x * traj.expectation(sigma.adjoint() * sigma);
  const auto n = static_cast<Eigen::Index>(traj.size());
  return convolve_irf(Eigen::Map<const Eigen::VectorXd>(traj.times().data(), n), rate, irf);
}

void HistogramSynthesis::validate() const {
  if (!(g2 >= 0.0)) throw std::invalid_argument("histogram.g2: must be >= 0");
  if (!(v_raw >= 0.0 && v_raw <= 1.0)) throw std::invalid_argument("histogram.v_raw: must be in [0, 1]");
  if (!(side_area > 0.0)) throw std::invalid_argument("histogram.side_area: must be > 0");
  if (n_side_peaks < 1) throw std::invalid_argument("histogram.side_peaks: must be >= 1");
  if (!(rep_period_ps > 0.0)) throw std::invalid_argument("histogram.rep_period_ps: must be > 0");
  if (!(lifetime_ps > 0.0)) throw std::invalid_argument("histogram.lifetime_ps: must be > 0");
  if (!(bin_width_ps > 0.0)) throw std::invalid_argument("histogram.bin_width_ps: must be > 0");
}

std::vector<double> expected_counts(const HistogramSynthesis& s, double center_area,
                                    std::vector<double>* centers) {
  s.validate();
  const double lo = -(s.n_side_peaks + 0.5) * s.rep_period_ps;
  const auto bins =
      static_cast<std::size_t>(std::llround(2.0 * (s.n_side_peaks + 0.5) * s.rep_period_ps / s.bin_width_ps));
  // CDF of the two-sided exponential exp(-|x| / T) / (2 T).
  auto cdf = [T = s.lifetime_ps](double x) {
    return x < 0.0 ? 0.5 * std::exp(x / T) : 1.0 - 0.5 * std::exp(-x / T);
  };
  std::vector<double> mean(bins, 0.0);
  if (centers) centers->resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double a = lo + static_cast<double>(b) * s.bin_width_ps;
    const double z = a + s.bin_width_ps;
    if (centers) (*centers)[b] = 0.5 * (a + z);
    for (int k = -s.n_side_peaks; k <= s.n_side_peaks; ++k) {
      const double peak_area = k == 0 ? center_area : s.side_area;
      const double c = k * s.rep_period_ps;
      mean[b] += peak_area * (cdf(z - c) - cdf(a - c));
    }
  }
  return mean;
}

HistogramSet synthesize_histograms(const HistogramSynthesis& s) {
  s.validate();
  std::seed_seq seq{s.seed, std::uint64_t{0x5eed}};
  std::mt19937_64 rng(seq);

  auto sample = [&](double center_area) {
    CoincidenceHistogram h;
    h.rep_period_ps = s.rep_period_ps;
    const auto mean = expected_counts(s, center_area, &h.bin_centers_ps);
    h.counts.resize(mean.size());
    for (std::size_t b = 0; b < mean.size(); ++b) {
      if (mean[b] > 0.0) {
        std::poisson_distribution<std::int64_t> pois(mean[b]);
        h.counts[b] = pois(rng);
      } else {
        h.counts[b] = 0;
      }
    }
    return h;
  };

  HistogramSet out;
  out.hbt = sample(s.g2 * s.side_area);
  out.hom_co = sample((1.0 - s.v_raw) * 0.5 * s.side_area);
  out.hom_cross = sample(0.5 * s.side_area);
  return out;
}

}  // namespace dpe
