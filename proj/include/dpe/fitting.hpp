#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dpe/histogram.hpp"

namespace dpe {

class DegenerateFitError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct FitParameter {
  std::string name;
  double value;
  double sigma;  // 1-sigma from the residual-scaled covariance
};

struct FitReport {
  std::vector<FitParameter> parameters;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;

  /// Estimates from a non-converged fit must not be used silently.
  bool reliable() const { return converged; }
  double value(std::string_view name) const;
  double sigma(std::string_view name) const;
};

/// Serializes as "key = value" lines; sigma entries are suffixed "_sigma".
void write_report(std::ostream& os, const FitReport& r);

struct LeastSquaresOptions {
  int max_iterations = 200;
  double xtol = 1e-10;
};

/// A*exp(-(t - t_peak)/T1) + b on the samples from the maximum onward, or,
/// with an IRF FWHM, the same decay convolved with a Gaussian over all samples
/// (parameters T1, amplitude, baseline, onset).
FitReport fit_exponential(std::span<const double> t, std::span<const double> y,
                          std::optional<double> irf_fwhm_ps = std::nullopt,
                          LeastSquaresOptions opt = {});

/// Lorentzian peak or dip on a linear baseline: center, fwhm, amplitude, Q.
FitReport fit_lorentzian(std::span<const double> energy, std::span<const double> y,
                         LeastSquaresOptions opt = {});

/// E(phi) = offset + amplitude * cos(2 (phi - phase)), phi in degrees.
/// Reports amplitude >= 0, phase in [0, 180) and fss = 2 * amplitude.
FitReport fit_sinusoid(std::span<const double> angle_deg, std::span<const double> energy,
                       LeastSquaresOptions opt = {});

struct Estimate {
  double value;
  double sigma;
};

/// Centre-peak area over mean side-peak area; window <= 0 selects rep/2.
Estimate hbt_g2(const CoincidenceHistogram& h, double window_ps = 0.0);

/// Side-peak-normalized centre areas: 1 - (A_co / S_co) / (A_cross / S_cross).
Estimate hom_visibility(const CoincidenceHistogram& co, const CoincidenceHistogram& cross,
                        double window_ps = 0.0);

/// Corrects a raw HOM visibility for multi-photon events and an unbalanced
/// beam splitter with reflectivity R.
double correct_visibility(double v_raw, double g2, double reflectivity);

}  // namespace dpe
