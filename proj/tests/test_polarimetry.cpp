#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "dpe/polarimetry.hpp"

using namespace dpe;

namespace {

StokesVector random_physical(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::Vector3d dir(n(rng), n(rng), n(rng));
  dir.normalize();
  StokesVector s;
  s << 1.0, u(rng) * dir;
  return s;
}

std::vector<PolarimetrySample> synthetic(const std::vector<double>& angles, double (*f)(double)) {
  std::vector<PolarimetrySample> out;
  for (double a : angles) out.push_back({a, f(a * std::numbers::pi / 180.0)});
  return out;
}

}  // namespace

TEST(Mueller, TextbookActions) {
  const StokesVector h(1, 1, 0, 0);
  EXPECT_TRUE((mueller_polarizer(0.0) * h).isApprox(h));
  EXPECT_TRUE((mueller_qwp(45.0) * h).isApprox(StokesVector(1, 0, 0, -1), 1e-12));
  EXPECT_TRUE((mueller_hwp(22.5) * h).isApprox(StokesVector(1, 0, 1, 0), 1e-12));
  EXPECT_NEAR((mueller_polarizer(90.0) * h).norm(), 0.0, 1e-15);
}

TEST(Mueller, PreservesPhysicality) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ang(-180.0, 180.0);
  for (int i = 0; i < 200; ++i) {
    const auto s = random_physical(rng);
    const double a = ang(rng);
    for (const MuellerMatrix& m : {mueller_qwp(a), mueller_hwp(a), mueller_retarder(a, 0.3)}) {
      const StokesVector out = m * s;
      EXPECT_NEAR(out[0], 1.0, 1e-12);
      EXPECT_NEAR(dop(out), dop(s), 1e-12);
    }
    const StokesVector p = mueller_polarizer(a) * s;
    EXPECT_LE(dop(p), 1.0 + 1e-12);
  }
}

TEST(Mueller, DegreesOfPolarization) {
  const StokesVector h(1, 1, 0, 0), circ(1, 0, 0, -0.996), un(1, 0, 0, 0);
  EXPECT_DOUBLE_EQ(dlp(h), 1.0);
  EXPECT_DOUBLE_EQ(dcp(h), 0.0);
  EXPECT_DOUBLE_EQ(dcp(circ), 0.996);
  EXPECT_EQ(dop(un), 0.0);
  EXPECT_EQ(dlp(un), 0.0);
  EXPECT_EQ(dcp(un), 0.0);
  EXPECT_TRUE(is_physical(StokesVector(1, 0.06, 0.24, -0.98)));
  EXPECT_FALSE(is_physical(StokesVector(1, 0.9, 0.9, 0.0)));
  EXPECT_FALSE(is_physical(StokesVector(0, 0, 0, 0)));
}

TEST(RotatingQwp, SimpleInputs) {
  const auto angles = uniform_half_turn(36);
  for (const auto& s : rotating_qwp_intensities(StokesVector(1, 0, 0, 0), angles))
    EXPECT_NEAR(s.intensity, 0.5, 1e-15);
  const auto circ = rotating_qwp_intensities(StokesVector(1, 0, 0, -1), angles);
  const auto k = fourier_coefficients(circ);
  EXPECT_GT(std::abs(k.b), 10 * (std::abs(k.c) + std::abs(k.d)));
}

TEST(RotatingQwp, RoundTrip) {
  std::mt19937_64 rng(12345);
  const auto angles = uniform_half_turn(36);
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_physical(rng);
    const auto r = stokes_from_coefficients(fourier_coefficients(rotating_qwp_intensities(s, angles)));
    ASSERT_LT((r.s - s).cwiseAbs().maxCoeff(), 1e-10) << "vector " << i;
    ASSERT_NEAR(r.dop, dop(s), 1e-10);
  }
}

TEST(RotatingQwp, ReferenceVectorThroughTheChain) {
  const StokesVector s(1, 0.79, -0.28, -0.16);
  const auto r = stokes_from_coefficients(fourier_coefficients(rotating_qwp_intensities(s, uniform_half_turn(36))));
  EXPECT_LT((r.s - s).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Stokes, ReferenceDegreesOfPolarization) {
  const StokesVector cols[] = {{1, 0.79, -0.28, -0.16}, {1, -0.82, 0.30, 0.16}, {1, 0.06, 0.24, -0.98}};
  const double expect[] = {0.853, 0.888, 1.011};
  // reference values with their quoted uncertainties
  const double reference[] = {0.86, 0.89, 1.01};
  const double quoted[] = {0.01, 0.01, 0.02};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(dop(cols[i]), expect[i], 5e-4);
    EXPECT_NEAR(dop(cols[i]), reference[i], quoted[i]);
  }
}

TEST(Fourier, ConstantAndSingleHarmonic) {
  const auto angles = uniform_half_turn(36);
  const auto k0 = fourier_coefficients(synthetic(angles, [](double) { return 3.0; }));
  EXPECT_NEAR(k0.a, 6.0, 1e-12);
  EXPECT_NEAR(k0.b, 0.0, 1e-12);
  EXPECT_NEAR(k0.c, 0.0, 1e-12);
  EXPECT_NEAR(k0.d, 0.0, 1e-12);
  const auto k4 = fourier_coefficients(synthetic(angles, [](double t) { return std::cos(4 * t); }));
  EXPECT_NEAR(k4.a, 0.0, 1e-12);
  EXPECT_NEAR(k4.b, 0.0, 1e-12);
  // harmonic sums carry 4/N, so a unit cos 4 theta gives C = 2
  EXPECT_NEAR(k4.c, 2.0, 1e-12);
  EXPECT_NEAR(k4.d, 0.0, 1e-12);
  const auto ks = fourier_coefficients(synthetic(uniform_half_turn(10), [](double t) {
    return 1.0 + 0.3 * std::sin(2 * t) + 0.2 * std::cos(4 * t) - 0.1 * std::sin(4 * t);
  }));
  EXPECT_NEAR(ks.a, 2.0, 1e-12);
  EXPECT_NEAR(ks.b, 0.6, 1e-12);
  EXPECT_NEAR(ks.c, 0.4, 1e-12);
  EXPECT_NEAR(ks.d, -0.2, 1e-12);
}

TEST(Fourier, GridErrors) {
  auto samples = rotating_qwp_intensities(StokesVector(1, 0.5, 0, 0), uniform_half_turn(36));
  samples[5].angle_deg += 1.0;
  EXPECT_THROW(fourier_coefficients(samples), std::invalid_argument);
  EXPECT_THROW(fourier_coefficients(rotating_qwp_intensities(StokesVector(1, 0, 0, 0), uniform_half_turn(6))),
               std::invalid_argument);
  std::vector<double> partial;
  for (int i = 0; i < 18; ++i) partial.push_back(5.0 * i);
  EXPECT_THROW(fourier_coefficients(rotating_qwp_intensities(StokesVector(1, 0, 0, 0), partial)),
               std::invalid_argument);
}

TEST(Stokes, DegenerateAndUnphysicalCoefficients) {
  EXPECT_THROW(stokes_from_coefficients({1.0, 0.0, 1.0, 0.0}), std::domain_error);
  EXPECT_THROW(stokes_from_coefficients({1.0, 2.0, 0.0, 0.0}), std::domain_error);
}

TEST(Hwp, ContrastEqualsLinearDegree) {
  std::vector<double> angles;
  for (int i = 0; i <= 180; ++i) angles.push_back(0.5 * i);
  // linear part at 20 degrees: extrema at 10 and 55 degrees of HWP, both sampled
  const double psi = 40.0 * std::numbers::pi / 180.0;
  const StokesVector s(1, 0.84 * std::cos(psi), 0.84 * std::sin(psi), 0.1);
  EXPECT_NEAR(contrast(hwp_polarizer_scan(s, angles)), dlp(s), 1e-12);
  EXPECT_NEAR(contrast(hwp_polarizer_scan(StokesVector(1, 0.84, 0, 0), angles)), 0.84, 1e-12);
  EXPECT_NEAR(contrast(hwp_polarizer_scan(StokesVector(1, 0, 0, 1), angles)), 0.0, 1e-12);

  const auto d = hwp_polarizer_scan(StokesVector(1, 0, 1, 0), angles);
  std::size_t best = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i].intensity > d[best].intensity) best = i;
  EXPECT_NEAR(d[best].angle_deg, 22.5, 1e-9);
}

TEST(Linearity, ScalingInput) {
  std::mt19937_64 rng(99);
  const auto angles = uniform_half_turn(36);
  for (int i = 0; i < 20; ++i) {
    const auto s = random_physical(rng);
    const double k = 0.1 + 5.0 * i;
    const auto a = rotating_qwp_intensities(s, angles);
    const auto b = rotating_qwp_intensities(k * s, angles);
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(b[j].intensity, k * a[j].intensity, 1e-12 * k);
    EXPECT_NEAR(dop(k * s), dop(s), 1e-12);
    EXPECT_NEAR(dlp(k * s), dlp(s), 1e-12);
    EXPECT_NEAR(dcp(k * s), dcp(s), 1e-12);
  }
}

TEST(Csv, RoundTrip) {
  const auto samples = rotating_qwp_intensities(StokesVector(1, 0.3, -0.2, 0.5), uniform_half_turn(36));
  std::stringstream ss;
  write_samples_csv(ss, samples);
  const auto back = read_samples_csv(ss);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].angle_deg, samples[i].angle_deg);
    EXPECT_EQ(back[i].intensity, samples[i].intensity);
  }
  std::stringstream bad("angle_deg,intensity\n0,abc\n");
  EXPECT_THROW(read_samples_csv(bad), std::invalid_argument);
}
