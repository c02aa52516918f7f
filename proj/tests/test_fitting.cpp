#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "dpe/correlations.hpp"
#include "dpe/fitting.hpp"

using namespace dpe;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

// Unit step exponential convolved with a unit-area Gaussian, by direct quadrature.
double smeared_decay(double t, double onset, double tau, double sigma) {
  const int n = 4000;
  const double lo = std::max(0.0, t - onset - 10 * sigma);
  const double hi = std::max(lo, t - onset + 10 * sigma);
  if (hi <= lo) return 0.0;
  const double h = (hi - lo) / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double s = lo + i * h;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    const double u = (t - onset - s) / sigma;
    sum += w * std::exp(-s / tau) * std::exp(-0.5 * u * u);
  }
  return sum * h / (sigma * std::sqrt(2 * std::numbers::pi));
}

}  // namespace

TEST(Exponential, NoiselessLifetimes) {
  for (double tau : {394.0, 224.0}) {
    const auto t = linspace(0.0, 3000.0, 1501);
    std::vector<double> y;
    for (double x : t) y.push_back(1000.0 * std::exp(-x / tau) + 2.0);
    const auto r = fit_exponential(t, y);
    EXPECT_TRUE(r.reliable());
    EXPECT_NEAR(r.value("T1"), tau, 0.1);
    EXPECT_NEAR(r.value("T1"), tau, 1e-6 * tau);
    EXPECT_NEAR(r.value("amplitude"), 1000.0, 1e-6 * 1000.0);
    EXPECT_NEAR(r.value("baseline"), 2.0, 1e-6);
    EXPECT_LT(r.sigma("T1"), 1e-6);
  }
}

TEST(Exponential, FitsFromThePeakOnward) {
  const auto t = linspace(-500.0, 2500.0, 1501);
  std::vector<double> y;
  for (double x : t) y.push_back(x < 0 ? 0.0 : 50.0 * std::exp(-x / 394.0));
  EXPECT_NEAR(fit_exponential(t, y).value("T1"), 394.0, 1e-6 * 394.0);
}

TEST(Exponential, NoisyDataSigmaIsSensible) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto t = linspace(0.0, 3000.0, 751);
  std::vector<double> y;
  for (double x : t) y.push_back(500.0 * std::exp(-x / 394.0) + noise(rng));
  const auto r = fit_exponential(t, y);
  EXPECT_GT(r.sigma("T1"), 0.0);
  EXPECT_LT(std::abs(r.value("T1") - 394.0), 5.0 * r.sigma("T1"));
}

TEST(Exponential, WithInstrumentResponse) {
  const double fwhm = 60.0;
  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const auto t = linspace(-300.0, 3000.0, 661);
  std::vector<double> y;
  for (double x : t) y.push_back(800.0 * smeared_decay(x, 40.0, 394.0, sigma) + 1.5);
  const auto r = fit_exponential(t, y, fwhm);
  EXPECT_TRUE(r.reliable());
  EXPECT_NEAR(r.value("T1"), 394.0, 1e-4 * 394.0);
  EXPECT_NEAR(r.value("onset"), 40.0, 0.05);
  EXPECT_NEAR(r.value("amplitude"), 800.0, 0.1);
  EXPECT_NEAR(r.value("baseline"), 1.5, 1e-3);
}

TEST(Exponential, SpadResponseOnConvolvedTrace) {
  const auto t = linspace(0.0, 4000.0, 2001);
  Eigen::VectorXd rate(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) rate[static_cast<Eigen::Index>(i)] = std::exp(-t[i] / 224.0);
  const auto trace = convolve_irf(Eigen::Map<const Eigen::VectorXd>(t.data(), rate.size()), rate,
                                  IRF{kSpadIrfFwhmPs});
  std::vector<double> tt(trace.t.data(), trace.t.data() + trace.t.size());
  std::vector<double> yy(trace.intensity.data(), trace.intensity.data() + trace.intensity.size());
  EXPECT_NEAR(fit_exponential(tt, yy, kSpadIrfFwhmPs).value("T1"), 224.0, 1.0);
}

TEST(Exponential, Errors) {
  const auto t = linspace(0.0, 100.0, 50);
  const std::vector<double> flat(50, 3.0);
  EXPECT_THROW(fit_exponential(t, flat), DegenerateFitError);
  const auto short_t = linspace(0.0, 10.0, 8);
  std::vector<double> y;
  for (double x : short_t) y.push_back(std::exp(-x));
  EXPECT_THROW(fit_exponential(short_t, y), std::invalid_argument);
  std::vector<double> late(50, 0.0);
  late[45] = 1.0;
  EXPECT_THROW(fit_exponential(t, late), std::invalid_argument);
  EXPECT_THROW(fit_exponential(t, std::vector<double>(49, 1.0)), std::invalid_argument);
}

TEST(Lorentzian, CavityDip) {
  const double center = 1363.9, q = 1351.0, w = center / q;
  const auto e = linspace(center - 6.0, center + 6.0, 601);
  std::vector<double> y;
  for (double x : e) {
    const double u = 2.0 * (x - center) / w;
    y.push_back(0.9 + 0.004 * (x - center) - 0.6 / (1.0 + u * u));
  }
  const auto r = fit_lorentzian(e, y);
  EXPECT_NEAR(r.value("Q"), 1351.0, 2.0);
  EXPECT_NEAR(r.value("Q"), 1351.0, 1e-6 * 1351.0);
  EXPECT_NEAR(r.value("center"), center, 1e-6);
  EXPECT_NEAR(r.value("amplitude"), -0.6, 1e-6);
}

TEST(Lorentzian, SymmetricPeak) {
  const auto e = linspace(-5.0, 5.0, 201);
  std::vector<double> y;
  for (double x : e) y.push_back(3.0 / (1.0 + std::pow(2.0 * (x - 0.35) / 0.8, 2)));
  const auto r = fit_lorentzian(e, y);
  EXPECT_NEAR(r.value("center"), 0.35, 1e-6);
  EXPECT_NEAR(r.value("fwhm"), 0.8, 1e-6);
  EXPECT_NEAR(r.value("amplitude"), 3.0, 1e-6);
  EXPECT_THROW(fit_lorentzian(e, std::vector<double>(e.size(), 1.0)), DegenerateFitError);
}

TEST(Sinusoid, FineStructureFromPolarizationSeries) {
  const auto phi = linspace(0.0, 360.0, 73);
  std::vector<double> energy;
  for (double p : phi) energy.push_back(1363.9e3 + 2.95 * std::cos(2.0 * (p - 17.0) * std::numbers::pi / 180.0));
  const auto r = fit_sinusoid(phi, energy);
  EXPECT_NEAR(r.value("fss"), 5.9, 0.1);
  EXPECT_NEAR(r.value("fss"), 5.9, 1e-6 * 5.9);
  EXPECT_NEAR(r.value("phase_deg"), 17.0, 1e-6);
}

TEST(Sinusoid, PhaseIsRecoveredModuloHalfTurn) {
  for (double phase : {-40.0, 0.0, 95.0, 200.0, 359.0}) {
    const auto phi = linspace(0.0, 170.0, 18);
    std::vector<double> e;
    for (double p : phi) e.push_back(10.0 + 0.7 * std::cos(2.0 * (p - phase) * std::numbers::pi / 180.0));
    const auto r = fit_sinusoid(phi, e);
    const double expect = std::fmod(std::fmod(phase, 180.0) + 180.0, 180.0);
    double diff = std::abs(r.value("phase_deg") - expect);
    diff = std::min(diff, 180.0 - diff);
    EXPECT_LT(diff, 1e-6) << phase;
    EXPECT_NEAR(r.value("amplitude"), 0.7, 1e-9);
    EXPECT_GE(r.value("phase_deg"), 0.0);
    EXPECT_LT(r.value("phase_deg"), 180.0);
  }
}

TEST(Sinusoid, ZeroSplittingAndCoverage) {
  const auto phi = linspace(0.0, 180.0, 19);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> e;
  for (std::size_t i = 0; i < phi.size(); ++i) e.push_back(1363.9e3 + noise(rng));
  const auto r = fit_sinusoid(phi, e);
  EXPECT_LT(r.value("amplitude"), 3.0 * r.sigma("amplitude") + 1e-12);
  const auto narrow = linspace(0.0, 90.0, 10);
  EXPECT_THROW(fit_sinusoid(narrow, std::vector<double>(10, 1.0)), std::invalid_argument);
}

TEST(Report, Serialization) {
  const auto t = linspace(0.0, 2000.0, 401);
  std::vector<double> y;
  for (double x : t) y.push_back(std::exp(-x / 394.0));
  const auto r = fit_exponential(t, y);
  std::ostringstream os;
  write_report(os, r);
  const std::string s = os.str();
  for (const char* key : {"T1 = ", "T1_sigma = ", "amplitude = ", "baseline = ", "residual_norm = ",
                          "converged = true", "iterations = "})
    EXPECT_NE(s.find(key), std::string::npos) << key;
  EXPECT_THROW(r.value("nope"), std::out_of_range);
}

TEST(Hbt, RecoversSynthesizedPurity) {
  for (double g2 : {0.0, 0.004, 0.014}) {
    HistogramSynthesis s;
    s.g2 = g2;
    s.side_area = 1e5;
    const auto h = synthesize_histograms(s).hbt;
    const auto e = hbt_g2(h);
    EXPECT_NEAR(e.value, g2, std::max(0.002, 4.0 * e.sigma)) << g2;
    EXPECT_GT(e.sigma, 0.0);
    if (g2 == 0.0) {
      EXPECT_EQ(e.value, 0.0);
    }
  }
}

TEST(Hbt, ScaleInvariance) {
  HistogramSynthesis s;
  s.g2 = 0.01;
  auto h = synthesize_histograms(s).hbt;
  const double a = hbt_g2(h).value;
  for (auto& c : h.counts) c *= 7;
  EXPECT_NEAR(hbt_g2(h).value, a, 1e-14);
}

TEST(Hbt, NeedsSidePeaks) {
  HistogramSynthesis s;
  s.n_side_peaks = 1;
  EXPECT_THROW(hbt_g2(synthesize_histograms(s).hbt), std::invalid_argument);
}

TEST(Hom, RecoversSynthesizedVisibility) {
  for (double v : {0.73, 0.84}) {
    HistogramSynthesis s;
    s.v_raw = v;
    const auto set = synthesize_histograms(s);
    const auto e = hom_visibility(set.hom_co, set.hom_cross);
    EXPECT_NEAR(e.value, v, 0.02) << v;
  }
}

TEST(Hom, ScaleInvarianceAndIdentity) {
  HistogramSynthesis s;
  s.v_raw = 0.8;
  auto set = synthesize_histograms(s);
  const double a = hom_visibility(set.hom_co, set.hom_cross).value;
  for (auto& c : set.hom_co.counts) c *= 3;
  EXPECT_NEAR(hom_visibility(set.hom_co, set.hom_cross).value, a, 1e-14);
  EXPECT_NEAR(hom_visibility(set.hom_cross, set.hom_cross).value, 0.0, 1e-15);
}

TEST(Visibility, CorrectionTriples) {
  EXPECT_NEAR(correct_visibility(0.73, 0.014, 0.488), 0.756, 1e-3);
  EXPECT_NEAR(correct_visibility(0.52, 0.007, 0.488), 0.531, 1e-3);
  EXPECT_NEAR(correct_visibility(0.84, 0.004, 0.488), 0.848, 1e-3);
  EXPECT_NEAR(correct_visibility(0.73, 0.014, 0.488), 0.75, 0.01);
  EXPECT_NEAR(correct_visibility(0.52, 0.007, 0.488), 0.53, 0.01);
  EXPECT_NEAR(correct_visibility(0.84, 0.004, 0.488), 0.85, 0.01);
}

TEST(Visibility, IdentityAtIdealInputs) {
  for (double v : {0.0, 0.3, 0.99, 1.0}) EXPECT_NEAR(correct_visibility(v, 0.0, 0.5), v, 1e-15);
  EXPECT_THROW(correct_visibility(1.2, 0.0, 0.5), std::invalid_argument);
  EXPECT_THROW(correct_visibility(0.5, 1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(correct_visibility(0.5, 0.0, 0.0), std::invalid_argument);
}
