#include "dpe/polarimetry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dpe/csv.hpp"

namespace dpe {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double analyzer_intensity(const MuellerMatrix& element, const StokesVector& s) {
  return (mueller_polarizer(0.0) * element * s)[0];
}

}  // namespace

bool is_physical(const StokesVector& s, double slack) {
  return s[0] > 0.0 && s.tail<3>().norm() <= s[0] * (1.0 + slack);
}

std::vector<PolarimetrySample> rotating_qwp_intensities(const StokesVector& s_in,
                                                        std::span<const double> angles) {
  std::vector<PolarimetrySample> out;
  out.reserve(angles.size());
  for (double a : angles) out.push_back({a, analyzer_intensity(mueller_qwp(a), s_in)});
  return out;
}

std::vector<double> uniform_half_turn(int n) {
  if (n < 1) throw std::invalid_argument("uniform_half_turn: need at least one angle");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = 180.0 * i / n;
  return out;
}

FourierCoefficients fourier_coefficients(std::span<const PolarimetrySample> samples) {
  const auto n = samples.size();
  if (n < 8) throw std::invalid_argument("fourier_coefficients: need at least 8 angles");
  const double step = samples[1].angle_deg - samples[0].angle_deg;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(samples[i].angle_deg - samples[i - 1].angle_deg - step) > 1e-9)
      throw std::invalid_argument("fourier_coefficients: angle grid is not uniform");
  if (std::abs(std::abs(step) * static_cast<double>(n) - 180.0) > 1e-6)
    throw std::invalid_argument("fourier_coefficients: angles must cover exactly one half turn");

  FourierCoefficients k{0.0, 0.0, 0.0, 0.0};
  for (const auto& p : samples) {
    const double th = p.angle_deg * kDeg;
    k.a += p.intensity;
    k.b += p.intensity * std::sin(2.0 * th);
    k.c += p.intensity * std::cos(4.0 * th);
    k.d += p.intensity * std::sin(4.0 * th);
  }
  const double nn = static_cast<double>(n);
  k.a *= 2.0 / nn;
  k.b *= 4.0 / nn;
  k.c *= 4.0 / nn;
  k.d *= 4.0 / nn;
  return k;
}

StokesResult stokes_from_coefficients(const FourierCoefficients& k) {
  const double norm = k.a - k.c;
  if (std::abs(norm) <= 1e-12 * std::max({std::abs(k.a), std::abs(k.c), 1e-300}))
    throw std::domain_error("stokes_from_coefficients: A - C vanishes (degenerate input)");
  StokesResult r;
  r.s << 1.0, 2.0 * k.c / norm, 2.0 * k.d / norm, k.b / norm;
  r.dop = dop(r.s);
  if (!is_physical(r.s))
    throw std::domain_error("stokes_from_coefficients: DOP " + std::to_string(r.dop) +
                            " exceeds 1 beyond the measurement slack");
  return r;
}

std::vector<PolarimetrySample> hwp_polarizer_scan(const StokesVector& s_in,
                                                  std::span<const double> angles) {
  std::vector<PolarimetrySample> out;
  out.reserve(angles.size());
  for (double a : angles) out.push_back({a, analyzer_intensity(mueller_hwp(a), s_in)});
  return out;
}

double contrast(std::span<const PolarimetrySample> samples) {
  if (samples.empty()) throw std::invalid_argument("contrast: no samples");
  auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(),
                                      [](const auto& x, const auto& y) { return x.intensity < y.intensity; });
  const double sum = hi->intensity + lo->intensity;
  if (!(sum > 0.0)) throw std::domain_error("contrast: zero intensity");
  return (hi->intensity - lo->intensity) / sum;
}

void write_samples_csv(std::ostream& os, std::span<const PolarimetrySample> samples) {
  os << "theta_deg,intensity\r\n";
  for (const auto& p : samples) os << csv::format(p.angle_deg) << ',' << csv::format(p.intensity) << "\r\n";
}

std::vector<PolarimetrySample> read_samples_csv(std::istream& is) {
  const auto t = csv::read(is);
  const auto ai = t.column("theta_deg");
  const auto ii = t.column("intensity");
  std::vector<PolarimetrySample> out;
  for (const auto& row : t.rows) out.push_back({row[ai], row[ii]});
  return out;
}

}  // namespace dpe
