#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dpe/pulses.hpp"

using namespace dpe;

namespace {

PulseSpec unit_pulse() {
  PulseSpec p;
  p.fwhm_ps = 10.0;
  p.center_ps = 30.0;
  p.peak_rabi = 1.0;
  return p;
}

}  // namespace

TEST(Envelope, PeakAndHalfMaximum) {
  const auto p = unit_pulse();
  EXPECT_DOUBLE_EQ(envelope(p, 30.0), 1.0);
  EXPECT_NEAR(envelope(p, 25.0), 0.5, 1e-15);
  EXPECT_NEAR(envelope(p, 35.0), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(envelope(p, 30.0 - 3.7), envelope(p, 30.0 + 3.7));
}

TEST(Area, ClosedForm) {
  EXPECT_NEAR(area(unit_pulse()), 10.644670194312262, 1e-12);
}

TEST(Area, MatchesTrapezoidOverSupport) {
  const auto p = unit_pulse();
  const double half = support_half_width(p);
  const int n = 20001;
  const double h = 2.0 * half / (n - 1);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    sum += w * envelope(p, p.center_ps - half + i * h);
  }
  EXPECT_NEAR(sum * h / area(p), 1.0, 1e-9);
}

TEST(Area, LinearInPeak) {
  auto p = unit_pulse();
  const double a1 = area(p);
  p.peak_rabi = 3.5;
  EXPECT_NEAR(area(p), 3.5 * a1, 1e-12);
}

TEST(ScaleToArea, RoundTrip) {
  const auto p = scale_to_area(unit_pulse(), std::numbers::pi);
  EXPECT_NEAR(area(p), std::numbers::pi, 1e-12);
  EXPECT_EQ(scale_to_area(unit_pulse(), 0.0).peak_rabi, 0.0);
  EXPECT_THROW(scale_to_area(unit_pulse(), -1.0), std::invalid_argument);
}

TEST(PulseSpec, Validation) {
  auto p = unit_pulse();
  p.polarization = JonesVector(1.0, 1.0);
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = unit_pulse();
  p.fwhm_ps = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  PulseTrain train;
  EXPECT_DOUBLE_EQ(train.repetition_period_ps, 12500.0);
  train.repetition_period_ps = 0.0;
  EXPECT_THROW(train.validate(), std::invalid_argument);
}
