#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dpe {

struct EfficiencyStage {
  std::string name;
  double efficiency;  // fraction in (0, 1]
};

struct EfficiencyChain {
  std::string name;
  std::vector<EfficiencyStage> stages;

  void validate() const;
};

/// Product of stage efficiencies.
double chain_efficiency(const EfficiencyChain& chain);

/// Product of per-stage extinction ratios, each in (0, 1].
double combined_extinction(std::span<const double> ratios);

/// Setup presets: resonance fluorescence with a cross-polarizer, and the
/// double-pulse scheme with the given spectral-filter transmission.
EfficiencyChain resonance_fluorescence_chain();
EfficiencyChain double_pulse_chain(double filter_transmission = 0.39);

/// Stage-by-stage table, one column per chain; stages missing from a chain
/// print "N/A". Efficiencies in percent.
void write_budget_table(std::ostream& os, std::span<const EfficiencyChain> chains);

}  // namespace dpe
