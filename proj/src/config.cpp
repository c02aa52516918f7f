#include "dpe/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dpe/csv.hpp"

namespace dpe {

namespace pt = boost::property_tree;

std::vector<double> LinearAxis::values() const {
  std::vector<double> v(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    v[static_cast<std::size_t>(i)] = points == 1 ? start : start + (stop - start) * i / (points - 1);
  if (points > 1) v.back() = stop;
  return v;
}

JonesVector parse_polarization(const std::string& text, const std::string& path) {
  const std::string t = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(text));
  if (t == "h") return jones_h();
  if (t == "v") return jones_v();
  if (t == "d") return jones_linear(45.0);
  if (t == "a") return jones_linear(135.0);
  if (t == "sigma+" || t == "r") return jones_sigma_plus();
  if (t == "sigma-" || t == "l") return jones_sigma_minus();
  try {
    return jones_linear(csv::parse_double(t));
  } catch (const std::invalid_argument&) {
    throw ConfigError(path, "expected H, V, D, A, sigma+, sigma- or an angle in degrees, got '" + text + "'");
  }
}

namespace {

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::string text(const std::string& section, const std::string& key, const std::string& fallback) {
    const std::string path = section + "." + key;
    used_.insert(path);
    std::string value = fallback;
    if (const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'))) {
      if (const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0')))
        value = boost::algorithm::trim_copy(*v);
    }
    record(path, value);
    return value;
  }

  bool is_auto(const std::string& section, const std::string& key, const std::string& fallback) {
    return boost::algorithm::iequals(text(section, key, fallback), "auto");
  }

  double number(const std::string& section, const std::string& key, double fallback,
                const std::function<bool(double)>& ok = {}, const char* rule = nullptr) {
    const std::string s = text(section, key, csv::format(fallback));
    const std::string path = section + "." + key;
    double v;
    try {
      v = csv::parse_double(s);
    } catch (const std::invalid_argument&) {
      throw ConfigError(path, "not a number: '" + s + "'");
    }
    if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
    if (ok && !ok(v)) throw ConfigError(path, rule ? rule : "value out of range");
    return v;
  }

  int integer(const std::string& section, const std::string& key, int fallback, int minimum) {
    const std::string s = text(section, key, std::to_string(fallback));
    const std::string path = section + "." + key;
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(path, "not an integer: '" + s + "'");
    if (v < minimum) throw ConfigError(path, "must be >= " + std::to_string(minimum));
    return v;
  }

  bool flag(const std::string& section, const std::string& key, bool fallback) {
    const std::string s = boost::algorithm::to_lower_copy(text(section, key, fallback ? "on" : "off"));
    if (s == "on" || s == "true" || s == "yes" || s == "1") return true;
    if (s == "off" || s == "false" || s == "no" || s == "0") return false;
    throw ConfigError(section + "." + key, "expected on or off, got '" + s + "'");
  }

  void record(const std::string& path, const std::string& value) {
    for (auto& e : entries_) {
      if (e.first == path) {
        e.second = value;
        return;
      }
    }
    entries_.emplace_back(path, value);
  }

  void finish() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty()) throw ConfigError(section, "unknown key outside any section");
      for (const auto& [key, value] : body) {
        const std::string path = section + "." + key;
        if (!used_.count(path)) {
          const bool known_section = std::any_of(used_.begin(), used_.end(),
                                                 [&](const auto& u) { return u.rfind(section + ".", 0) == 0; });
          throw ConfigError(path, known_section ? "unknown key" : "unknown section");
        }
      }
    }
  }

  std::vector<std::pair<std::string, std::string>> entries() const { return entries_; }

 private:
  const pt::ptree& tree_;
  std::set<std::string> used_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

auto positive = [](double v) { return v > 0.0; };
auto non_negative = [](double v) { return v >= 0.0; };
auto percent = [](double v) { return v > 0.0 && v <= 100.0; };

LinearAxis axis(Reader& r, const std::string& section, const std::string& stem, LinearAxis d, int min_points = 1) {
  LinearAxis a;
  a.start = r.number(section, stem + "_start", d.start);
  a.stop = r.number(section, stem + "_stop", d.stop);
  a.points = r.integer(section, stem + "_points", d.points, min_points);
  if (a.points > 1 && a.stop == a.start) throw ConfigError(section + "." + stem + "_stop", "must differ from start");
  return a;
}

RunConfig build(const pt::ptree& tree) {
  Reader r(tree);
  RunConfig c;

  // [scheme]
  auto& sch = c.setup.scheme;
  sch.exciton_energy_mev = r.number("scheme", "exciton_energy_mev", sch.exciton_energy_mev, positive, "must be > 0");
  sch.fss_uev = r.number("scheme", "fss_uev", sch.fss_uev, non_negative, "must be >= 0");
  sch.binding_energy_mev = r.number("scheme", "binding_energy_mev", sch.binding_energy_mev, positive, "must be > 0");
  sch.g_factor = r.number("scheme", "g_factor", sch.g_factor);
  sch.diamagnetic_uev_per_t2 = r.number("scheme", "diamagnetic_uev_per_t2", sch.diamagnetic_uev_per_t2);
  sch.b_field_t = r.number("scheme", "b_field_t", 0.0, non_negative, "must be >= 0");
  const double sign = r.number("scheme", "zeeman_sign", 1.0, [](double v) { return v == 1.0 || v == -1.0; },
                               "must be +1 or -1");
  sch.zeeman_sign = sign > 0 ? 1 : -1;
  const bool field = sch.b_field_t != 0.0;
  const ExcitationSetup defaults = default_setup(sch.b_field_t);

  // [rates]
  const double xx_life = r.number("rates", "xx_lifetime_ps", 250.0, positive, "must be > 0");
  double x_life = 1.0 / defaults.rates.gamma_x;
  if (r.is_auto("rates", "x_lifetime_ps", "auto"))
    r.record("rates.x_lifetime_ps", csv::format(x_life));
  else
    x_life = r.number("rates", "x_lifetime_ps", 0.0, positive, "must be > 0");
  c.setup.rates.gamma_xx = 1.0 / xx_life;
  c.setup.rates.gamma_x = 1.0 / x_life;
  c.setup.rates.gamma_deph = r.number("rates", "dephasing_per_ps", 0.0, non_negative, "must be >= 0");

  // [pulses]
  auto& s = c.setup;
  s.tpe_center_ps = r.number("pulses", "tpe_center_ps", s.tpe_center_ps);
  s.tpe_fwhm_ps = r.number("pulses", "tpe_fwhm_ps", s.tpe_fwhm_ps, positive, "must be > 0");
  c.tpe_amplitude_auto = r.is_auto("pulses", "tpe_amplitude", "auto");
  if (!c.tpe_amplitude_auto)
    s.tpe_peak_rabi = r.number("pulses", "tpe_amplitude", 0.0, non_negative, "must be >= 0 or auto");
  s.tpe_polarization = parse_polarization(r.text("pulses", "tpe_polarization", "H"), "pulses.tpe_polarization");
  s.trigger_enabled = r.flag("pulses", "trigger", true);
  s.trigger_fwhm_ps = r.number("pulses", "trigger_fwhm_ps", s.trigger_fwhm_ps, positive, "must be > 0");
  s.trigger_delay_ps = defaults.trigger_delay_ps;
  if (r.is_auto("pulses", "trigger_delay_ps", "auto"))
    r.record("pulses.trigger_delay_ps", csv::format(s.trigger_delay_ps));
  else
    s.trigger_delay_ps = r.number("pulses", "trigger_delay_ps", 0.0);
  s.trigger_area_rad = std::numbers::pi * r.number("pulses", "trigger_area_pi", 1.0, non_negative, "must be >= 0");
  const std::string trig_default = field ? "sigma+" : "V";
  std::string trig = r.text("pulses", "trigger_polarization", "auto");
  if (boost::algorithm::iequals(trig, "auto")) {
    trig = trig_default;
    r.record("pulses.trigger_polarization", trig);
  }
  s.trigger_polarization = parse_polarization(trig, "pulses.trigger_polarization");
  const std::string target = boost::algorithm::to_lower_copy(r.text("pulses", "trigger_target", "b"));
  if (target != "a" && target != "b") throw ConfigError("pulses.trigger_target", "expected a or b");
  s.trigger_target = target == "a" ? Branch::A : Branch::B;
  s.repetition_period_ps = r.number("pulses", "repetition_period_ps", 12500.0, positive, "must be > 0");

  // [detection]
  std::string analyzer = r.text("detection", "analyzer", "auto");
  if (boost::algorithm::iequals(analyzer, "auto")) {
    analyzer = field ? "sigma-" : "V";
    r.record("detection.analyzer", analyzer);
  }
  s.analyzer = parse_polarization(analyzer, "detection.analyzer");
  const std::string irf = boost::algorithm::to_lower_copy(r.text("detection", "irf", "snspd"));
  if (irf == "snspd")
    c.irf.fwhm_ps = kSnspdIrfFwhmPs;
  else if (irf == "spad")
    c.irf.fwhm_ps = kSpadIrfFwhmPs;
  else
    c.irf.fwhm_ps = r.number("detection", "irf", 0.0, positive, "expected snspd, spad or a FWHM in ps > 0");

  // [integrator]
  s.integrator.rtol = r.number("integrator", "rtol", 1e-8, positive, "must be > 0");
  s.integrator.atol = r.number("integrator", "atol", 1e-12, positive, "must be > 0");
  s.integrator.max_step_ps = r.number("integrator", "max_step_ps", 0.0);

  // [grid] two-time correlation grid
  c.grid.points = r.integer("grid", "points", 400, 3);
  if (!r.is_auto("grid", "span_ps", "auto"))
    c.grid.span_ps = r.number("grid", "span_ps", 0.0, positive, "must be > 0 or auto");

  // [decay]
  c.decay_span_ps = r.number("decay", "span_ps", c.decay_span_ps, positive, "must be > 0");
  c.decay_step_ps = r.number("decay", "step_ps", c.decay_step_ps, positive, "must be > 0");
  c.decay_fit_delay_ps = 5.0 * xx_life;
  if (r.is_auto("decay", "fit_delay_ps", "auto"))
    r.record("decay.fit_delay_ps", csv::format(c.decay_fit_delay_ps));
  else
    c.decay_fit_delay_ps = r.number("decay", "fit_delay_ps", 0.0, non_negative, "must be >= 0 or auto");

  // [scan]
  c.tpe_amplitudes = axis(r, "scan", "tpe_amplitude", c.tpe_amplitudes, 3);
  c.trigger_areas_pi = axis(r, "scan", "trigger_area_pi", c.trigger_areas_pi, 3);
  c.map_delays_ps = axis(r, "scan", "delay_ps", c.map_delays_ps);
  c.map_areas_pi = axis(r, "scan", "map_area_pi", c.map_areas_pi);
  c.trigger_angles_deg = axis(r, "scan", "angle_deg", c.trigger_angles_deg);
  c.fields_t = axis(r, "scan", "field_t", c.fields_t);
  c.hwp_points = r.integer("scan", "hwp_points", c.hwp_points, 2);
  c.qwp_points = r.integer("scan", "qwp_points", c.qwp_points, 8);

  // [histogram]
  auto& h = c.histogram;
  h.g2 = r.number("histogram", "g2", 0.004, non_negative, "must be >= 0");
  h.v_raw = r.number("histogram", "v_raw", 0.84, [](double v) { return v >= 0.0 && v <= 1.0; }, "must be in [0, 1]");
  h.side_area = r.number("histogram", "side_area", 1e4, positive, "must be > 0");
  h.n_side_peaks = r.integer("histogram", "side_peaks", 3, 3);
  h.rep_period_ps = s.repetition_period_ps;
  h.lifetime_ps = x_life;
  h.bin_width_ps = r.number("histogram", "bin_width_ps", 4.0, positive, "must be > 0");
  c.splitting_ratio = r.number("histogram", "splitting_ratio", 0.488, [](double v) { return v > 0.0 && v < 1.0; },
                               "must be in (0, 1)");

  // [budget] percent values
  auto pct = [&](const char* key, double d) { return r.number("budget", key, d, percent, "must be in (0, 100]") / 100.0; };
  const std::vector<EfficiencyStage> front{{"sample_to_objective", pct("sample_to_objective", 9.0)},
                                           {"objective", pct("objective", 88.9)},
                                           {"window", pct("window", 92.6)},
                                           {"beam_splitter", pct("beam_splitter", 49.8)},
                                           {"hwp", pct("hwp", 98.4)}};
  const double pol_rf = pct("polarizer_rf", 40.7);
  const double pol_dpe = pct("polarizer_dpe", 81.4);
  const double fiber = pct("fiber_coupling", 55.0);
  const double filter = pct("filter", 39.0);
  const double filter_up = pct("filter_upgraded", 90.0);
  EfficiencyChain rf{"rf", front};
  rf.stages.push_back({"polarizer", pol_rf});
  rf.stages.push_back({"fiber_coupling", fiber});
  EfficiencyChain dpe{"dpe", front};
  dpe.stages.push_back({"polarizer", pol_dpe});
  dpe.stages.push_back({"fiber_coupling", fiber});
  EfficiencyChain up = dpe;
  up.name = "dpe_upgraded_filter";
  dpe.stages.push_back({"spectral_filter", filter});
  up.stages.push_back({"spectral_filter", filter_up});
  c.chains = {rf, dpe, up};

  // [extinction]
  std::vector<std::string> parts;
  const std::string stages = r.text("extinction", "stages", "1e-4, 1e-4");
  boost::algorithm::split(parts, stages, boost::algorithm::is_any_of(","));
  for (auto& p : parts) {
    double v;
    try {
      v = csv::parse_double(p);
    } catch (const std::invalid_argument&) {
      throw ConfigError("extinction.stages", "not a number: '" + p + "'");
    }
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError("extinction.stages", "each ratio must be in (0, 1]");
    c.extinction.push_back(v);
  }

  // [run]
  c.out_dir = r.text("run", "out", "out");
  const std::string seed = r.text("run", "seed", "1");
  const auto res = std::from_chars(seed.data(), seed.data() + seed.size(), c.seed);
  if (res.ec != std::errc() || res.ptr != seed.data() + seed.size())
    throw ConfigError("run.seed", "not a non-negative integer: '" + seed + "'");
  c.threads = r.integer("run", "threads", 1, 1);
  h.seed = c.seed;

  r.finish();
  try {
    s.validate();
    c.irf.validate();
    h.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ConfigError(colon == std::string::npos ? "config" : msg.substr(0, colon),
                      colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  c.entries = r.entries();
  return c;
}

}  // namespace

RunConfig parse_config(std::istream& is) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", "line " + std::to_string(e.line()) + ": " + e.message());
  }
  return build(tree);
}

RunConfig load_config(const std::optional<std::filesystem::path>& path) {
  if (!path) {
    std::istringstream empty;
    return parse_config(empty);
  }
  std::ifstream in(*path);
  if (!in) throw ConfigError("config", "cannot open '" + path->string() + "'");
  return parse_config(in);
}

void write_config_echo(std::ostream& os, const RunConfig& config) {
  csv::write_comments(os, config.entries);
}

}  // namespace dpe
