#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dpe/budget.hpp"
#include "dpe/correlations.hpp"
#include "dpe/experiments.hpp"

namespace dpe {

/// Validation failure; the message starts with the offending "section.key".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::invalid_argument(path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct LinearAxis {
  double start;
  double stop;
  int points;

  std::vector<double> values() const;
};

struct RunConfig {
  ExcitationSetup setup;
  bool tpe_amplitude_auto = true;
  IRF irf;
  QrtGrid grid;

  double decay_span_ps = 4000.0;
  double decay_step_ps = 1.0;
  double decay_fit_delay_ps = 1250.0;  // after the trace maximum

  LinearAxis tpe_amplitudes{0.0, 2.0, 41};
  LinearAxis trigger_areas_pi{0.0, 3.0, 31};
  LinearAxis map_delays_ps{0.0, 100.0, 21};
  LinearAxis map_areas_pi{0.0, 2.0, 9};
  LinearAxis trigger_angles_deg{0.0, 180.0, 19};
  LinearAxis fields_t{0.0, 4.0, 9};
  int hwp_points = 37;
  int qwp_points = 36;

  HistogramSynthesis histogram;
  double splitting_ratio = 0.488;

  std::vector<EfficiencyChain> chains;
  std::vector<double> extinction;

  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;

  /// Resolved "section.key" -> value pairs, in schema order.
  std::vector<std::pair<std::string, std::string>> entries;
};

/// Defaults merged with the INI file; throws ConfigError on unknown sections,
/// unknown keys, unparsable values or violated invariants.
RunConfig load_config(const std::optional<std::filesystem::path>& path);
RunConfig parse_config(std::istream& is);

/// "# key = value" preamble echoing the resolved configuration.
void write_config_echo(std::ostream& os, const RunConfig& config);

/// Parses a polarization name (H, V, D, A, sigma+, sigma-) or a linear angle in degrees.
JonesVector parse_polarization(const std::string& text, const std::string& path);

}  // namespace dpe
