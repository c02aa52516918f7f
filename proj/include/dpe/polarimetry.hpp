#pragma once

#include <cmath>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace dpe {

template <typename Scalar>
using Stokes = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Mueller = Eigen::Matrix<Scalar, 4, 4>;

using StokesVector = Stokes<double>;
using MuellerMatrix = Mueller<double>;

/// Slack on DOP <= 1 allowed for measured Stokes vectors.
inline constexpr double kStokesSlack = 0.05;

// Conventions: angles in degrees measured from horizontal; S3 > 0 is right
// circular. The retarder sign is the one under which a QWP at 45 degrees maps
// horizontal light to S3 = -1, so the rotating-QWP inversion reads S3 = B/(A-C).

/// Linear retarder with retardance `delta` (rad) and fast axis at theta.
template <typename Scalar>
Mueller<Scalar> mueller_retarder(Scalar theta_deg, Scalar delta) {
  using std::cos;
  using std::sin;
  const Scalar a = Scalar(2) * theta_deg * Scalar(std::numbers::pi) / Scalar(180);
  const Scalar c = cos(a), s = sin(a), cd = cos(delta), sd = sin(delta);
  Mueller<Scalar> m;
  m << 1, 0, 0, 0,
       0, c * c + s * s * cd, c * s * (1 - cd), s * sd,
       0, c * s * (1 - cd), s * s + c * c * cd, -c * sd,
       0, -s * sd, c * sd, cd;
  return m;
}

template <typename Scalar>
Mueller<Scalar> mueller_qwp(Scalar theta_deg) {
  return mueller_retarder(theta_deg, Scalar(std::numbers::pi / 2));
}

template <typename Scalar>
Mueller<Scalar> mueller_hwp(Scalar theta_deg) {
  return mueller_retarder(theta_deg, Scalar(std::numbers::pi));
}

/// Ideal linear polarizer with transmission axis at theta.
template <typename Scalar>
Mueller<Scalar> mueller_polarizer(Scalar theta_deg) {
  using std::cos;
  using std::sin;
  const Scalar a = Scalar(2) * theta_deg * Scalar(std::numbers::pi) / Scalar(180);
  const Scalar c = cos(a), s = sin(a);
  Mueller<Scalar> m;
  m << 1, c, s, 0,
       c, c * c, c * s, 0,
       s, c * s, s * s, 0,
       0, 0, 0, 0;
  return Scalar(0.5) * m;
}

template <typename Derived>
auto dop(const Eigen::MatrixBase<Derived>& s) {
  return s.template tail<3>().norm() / s[0];
}

template <typename Derived>
auto dlp(const Eigen::MatrixBase<Derived>& s) {
  using std::hypot;
  return hypot(s[1], s[2]) / s[0];
}

template <typename Derived>
auto dcp(const Eigen::MatrixBase<Derived>& s) {
  using std::abs;
  return abs(s[3]) / s[0];
}

/// S0 > 0 and DOP <= 1 + slack.
bool is_physical(const StokesVector& s, double slack = kStokesSlack);

struct PolarimetrySample {
  double angle_deg;
  double intensity;
};

/// Horizontal polarizer after a QWP rotated to each angle.
std::vector<PolarimetrySample> rotating_qwp_intensities(const StokesVector& s_in,
                                                        std::span<const double> angles_deg);

/// Half-turn uniform grid of N QWP angles starting at 0.
std::vector<double> uniform_half_turn(int n);

struct FourierCoefficients {
  double a, b, c, d;
};

/// Discrete Fourier sums of the rotating-QWP signal. Requires N >= 8 angles
/// uniformly covering a half turn. The fourth sum (sin 4 theta) is D.
FourierCoefficients fourier_coefficients(std::span<const PolarimetrySample> samples);

struct StokesResult {
  StokesVector s;
  double dop;
};

/// Normalized Stokes vector (S0 = 1) from the Fourier coefficients.
StokesResult stokes_from_coefficients(const FourierCoefficients& k);

/// Intensity through a horizontal polarizer after a HWP at each angle.
std::vector<PolarimetrySample> hwp_polarizer_scan(const StokesVector& s_in,
                                                  std::span<const double> angles_deg);

/// (Imax - Imin) / (Imax + Imin) of a sampled curve.
double contrast(std::span<const PolarimetrySample> samples);

void write_samples_csv(std::ostream& os, std::span<const PolarimetrySample> samples);
std::vector<PolarimetrySample> read_samples_csv(std::istream& is);

}  // namespace dpe
