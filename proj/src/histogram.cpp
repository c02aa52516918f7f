#include "dpe/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dpe/csv.hpp"

namespace dpe {

double CoincidenceHistogram::bin_width() const {
  if (bin_centers_ps.size() < 2) throw std::invalid_argument("histogram: need at least two bins");
  return bin_centers_ps[1] - bin_centers_ps[0];
}

void CoincidenceHistogram::validate() const {
  if (bin_centers_ps.size() != counts.size())
    throw std::invalid_argument("histogram: bin and count columns differ in length");
  const double w = bin_width();
  if (!(w > 0.0)) throw std::invalid_argument("histogram: bins must increase");
  for (std::size_t i = 1; i < bin_centers_ps.size(); ++i)
    if (std::abs(bin_centers_ps[i] - bin_centers_ps[i - 1] - w) > 1e-6 * w)
      throw std::invalid_argument("histogram: bins must be uniform");
  for (auto c : counts)
    if (c < 0) throw std::invalid_argument("histogram: counts must be non-negative");
  if (!(rep_period_ps > 0.0)) throw std::invalid_argument("histogram: rep_period must be > 0");
}

double CoincidenceHistogram::integrate(double lo, double hi) const {
  const double w = bin_width();
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double a = bin_centers_ps[i] - 0.5 * w;
    const double b = a + w;
    const double overlap = std::min(b, hi) - std::max(a, lo);
    if (overlap > 0.0) total += static_cast<double>(counts[i]) * overlap / w;
  }
  return total;
}

void write_histogram_csv(std::ostream& os, const CoincidenceHistogram& h) {
  os << "bin_center_ps,counts\r\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    os << csv::format(h.bin_centers_ps[i]) << ',' << h.counts[i] << "\r\n";
}

CoincidenceHistogram read_histogram_csv(std::istream& is, double rep_period_ps) {
  const auto table = csv::read(is);
  const auto ci = table.column("bin_center_ps");
  const auto ni = table.column("counts");
  CoincidenceHistogram h;
  h.rep_period_ps = rep_period_ps;
  for (const auto& row : table.rows) {
    h.bin_centers_ps.push_back(row[ci]);
    if (row[ni] != std::floor(row[ni])) throw std::invalid_argument("histogram: counts must be integers");
    h.counts.push_back(static_cast<std::int64_t>(row[ni]));
  }
  h.validate();
  return h;
}

}  // namespace dpe
