#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace dpe {

/// Binned coincidence counts versus detection delay.
struct CoincidenceHistogram {
  std::vector<double> bin_centers_ps;
  std::vector<std::int64_t> counts;
  double rep_period_ps = 12500.0;

  double bin_width() const;
  /// Checks uniform bins and non-negative counts.
  void validate() const;
  /// Counts inside [lo, hi], bins straddling an edge weighted by overlap.
  double integrate(double lo_ps, double hi_ps) const;
};

void write_histogram_csv(std::ostream& os, const CoincidenceHistogram& h);
CoincidenceHistogram read_histogram_csv(std::istream& is, double rep_period_ps);

}  // namespace dpe
