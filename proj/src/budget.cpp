#include "dpe/budget.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "dpe/csv.hpp"

namespace dpe {

void EfficiencyChain::validate() const {
  if (stages.empty()) throw std::invalid_argument("budget." + name + ": chain has no stages");
  for (const auto& s : stages)
    if (!(s.efficiency > 0.0 && s.efficiency <= 1.0))
      throw std::invalid_argument("budget." + name + "." + s.name + ": efficiency must be in (0, 100] percent");
}

double chain_efficiency(const EfficiencyChain& chain) {
  chain.validate();
  double p = 1.0;
  for (const auto& s : chain.stages) p *= s.efficiency;
  return p;
}

double combined_extinction(std::span<const double> ratios) {
  if (ratios.empty()) throw std::invalid_argument("extinction: no stages");
  double p = 1.0;
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("extinction: ratio must be in (0, 1]");
    p *= r;
  }
  return p;
}

namespace {

std::vector<EfficiencyStage> common_front() {
  return {{"sample_to_objective", 0.090}, {"objective", 0.889}, {"window", 0.926},
          {"beam_splitter", 0.498}, {"hwp", 0.984}};
}

}  // namespace

EfficiencyChain resonance_fluorescence_chain() {
  EfficiencyChain c{"rf", common_front()};
  c.stages.push_back({"polarizer", 0.407});
  c.stages.push_back({"fiber_coupling", 0.550});
  return c;
}

EfficiencyChain double_pulse_chain(double filter_transmission) {
  EfficiencyChain c{"dpe", common_front()};
  c.stages.push_back({"polarizer", 0.814});
  c.stages.push_back({"fiber_coupling", 0.550});
  c.stages.push_back({"spectral_filter", filter_transmission});
  return c;
}

void write_budget_table(std::ostream& os, std::span<const EfficiencyChain> chains) {
  std::vector<std::string> names;
  for (const auto& c : chains)
    for (const auto& s : c.stages)
      if (std::find(names.begin(), names.end(), s.name) == names.end()) names.push_back(s.name);

  std::vector<std::string> header{"stage"};
  for (const auto& c : chains) header.push_back(c.name + "_percent");
  csv::write_row(os, header);
  for (const auto& n : names) {
    std::vector<std::string> row{n};
    for (const auto& c : chains) {
      const auto it = std::find_if(c.stages.begin(), c.stages.end(), [&](const auto& s) { return s.name == n; });
      row.push_back(it == c.stages.end() ? "N/A" : csv::format(100.0 * it->efficiency));
    }
    csv::write_row(os, row);
  }
  std::vector<std::string> total{"overall"};
  for (const auto& c : chains) total.push_back(csv::format(100.0 * chain_efficiency(c)));
  csv::write_row(os, total);
}

}  // namespace dpe
