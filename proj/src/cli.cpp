#include "dpe/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "dpe/budget.hpp"
#include "dpe/config.hpp"
#include "dpe/correlations.hpp"
#include "dpe/csv.hpp"
#include "dpe/experiments.hpp"
#include "dpe/fitting.hpp"
#include "dpe/polarimetry.hpp"

namespace dpe::cli {

namespace {

namespace fs = std::filesystem;
using Summary = std::vector<std::pair<std::string, std::string>>;

struct Context {
  RunConfig config;
  std::string command;
  std::vector<std::string> outputs;
  Summary summary;

  void write(const std::string& name, const std::string& body) {
    fs::create_directories(config.out_dir);
    std::ofstream f(config.out_dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (config.out_dir / name).string());
    f << body;
    outputs.push_back(name);
  }

  std::ostringstream csv_stream() const {
    std::ostringstream os;
    csv::write_comments(os, Summary{{"command", command}});
    write_config_echo(os, config);
    return os;
  }

  void note(const std::string& key, double v) { summary.emplace_back(key, csv::format(v)); }
  void note(const std::string& key, const std::string& v) { summary.emplace_back(key, v); }
};

std::string header_line(const std::vector<std::string>& cols) {
  std::ostringstream os;
  csv::write_row(os, cols);
  return os.str();
}

void write_scan(Context& ctx, const std::string& name, const ScanResult& scan,
                const std::vector<std::pair<std::string, double>>& extra_axes = {}) {
  auto os = ctx.csv_stream();
  csv::write_comments(os, scan.metadata);
  std::vector<std::string> cols{scan.axis_name};
  for (const auto& [n, f] : extra_axes) cols.push_back(n);
  cols.insert(cols.end(), scan.names.begin(), scan.names.end());
  os << header_line(cols);
  for (std::size_t i = 0; i < scan.axis.size(); ++i) {
    std::vector<double> row{scan.axis[i]};
    for (const auto& [n, f] : extra_axes) row.push_back(scan.axis[i] * f);
    for (const auto& s : scan.series) row.push_back(s[i]);
    csv::write_row(os, row);
  }
  ctx.write(name, os.str());
}

// Resolves the "auto" TPE amplitude to the first XX-emission maximum.
void resolve_tpe(Context& ctx) {
  auto& s = ctx.config.setup;
  if (ctx.config.tpe_amplitude_auto) s.tpe_peak_rabi = calibrate_tpe_pi(s);
  ctx.note("tpe_amplitude_rad_per_ps", s.tpe_peak_rabi);
}

void cmd_decay(Context& ctx) {
  resolve_tpe(ctx);
  const auto& cfg = ctx.config;
  ExcitationSetup dpe = cfg.setup;
  dpe.trigger_enabled = true;
  ExcitationSetup tpe = cfg.setup;
  tpe.trigger_enabled = false;
  const double t0 = std::min(0.0, dpe.first_pulse_start());
  const int points = static_cast<int>(std::lround(cfg.decay_span_ps / cfg.decay_step_ps)) + 1;
  const TimeGrid grid{t0, t0 + cfg.decay_span_ps, points};
  const auto sigma = dpe.detection_operator();
  const auto a = pl_decay_trace(evolve(pure_state(Level::G), dpe.model(), grid), sigma, cfg.irf);
  const auto b = pl_decay_trace(evolve(pure_state(Level::G), tpe.model(), grid), sigma, cfg.irf);

  auto os = ctx.csv_stream();
  os << header_line({"t_ps", "dpe_intensity", "tpe_only_intensity"});
  for (Eigen::Index i = 0; i < a.t.size(); ++i)
    csv::write_row(os, std::vector<double>{a.t[i], a.intensity[i], b.intensity[i]});
  ctx.write("decay.csv", os.str());

  // Tail fit once the residual biexciton feeding has died out; the full-trace
  // IRF fit is reported alongside.
  Eigen::Index ip = 0;
  a.intensity.maxCoeff(&ip);
  const double start = a.t[ip] + cfg.decay_fit_delay_ps;
  const double stop = grid.t1 - 3.0 * cfg.irf.fwhm_ps;
  std::vector<double> t, y;
  for (Eigen::Index i = 0; i < a.t.size(); ++i) {
    if (a.t[i] < start || a.t[i] > stop) continue;
    t.push_back(a.t[i]);
    y.push_back(a.intensity[i]);
  }
  const auto fit = fit_exponential(t, y);
  const std::vector<double> ta(a.t.data(), a.t.data() + a.t.size());
  const std::vector<double> ya(a.intensity.data(), a.intensity.data() + a.intensity.size());
  const auto full = fit_exponential(ta, ya, cfg.irf.fwhm_ps);
  std::ostringstream rep;
  rep << "fit_start_ps = " << csv::format(start) << "\nfit_stop_ps = " << csv::format(stop) << '\n';
  write_report(rep, fit);
  rep << "full_trace_T1 = " << csv::format(full.value("T1")) << '\n';
  rep << "full_trace_T1_sigma = " << csv::format(full.sigma("T1")) << '\n';
  rep << "rise_dpe_ps = " << csv::format(a.rise_ps) << '\n';
  rep << "rise_tpe_only_ps = " << csv::format(b.rise_ps) << '\n';
  ctx.write("decay_fit.txt", rep.str());
  ctx.note("T1_ps", fit.value("T1"));
  ctx.note("T1_sigma_ps", fit.sigma("T1"));
  ctx.note("fit_converged", fit.converged ? "true" : "false");
  ctx.note("full_trace_T1_ps", full.value("T1"));
  ctx.note("rise_dpe_ps", a.rise_ps);
  ctx.note("rise_tpe_only_ps", b.rise_ps);
}

void cmd_rabi_tpe(Context& ctx) {
  const auto& cfg = ctx.config;
  const auto grid = cfg.tpe_amplitudes.values();
  const auto scan = rabi_scan_tpe(cfg.setup, grid, cfg.threads);
  write_scan(ctx, "rabi_tpe.csv", scan);
  const auto& xx = scan.column("xx_intensity");
  ctx.note("xx_maxima", static_cast<double>(local_maxima(xx).size()));
  const double pi_amp = tpe_pi_amplitude(cfg.setup, scan);
  ExcitationSetup s = cfg.setup;
  s.trigger_enabled = false;
  s.tpe_peak_rabi = pi_amp;
  ctx.note("pi_amplitude_rad_per_ps", pi_amp);
  ctx.note("xx_peak_population_at_pi", emission_integral(s).xx_peak_population);
}

void cmd_rabi_trigger(Context& ctx) {
  resolve_tpe(ctx);
  const auto& cfg = ctx.config;
  auto grid = cfg.trigger_areas_pi.values();
  for (auto& g : grid) g *= std::numbers::pi;
  auto scan = rabi_scan_trigger(cfg.setup, grid, cfg.threads);
  write_scan(ctx, "rabi_trigger.csv", scan, {{"trigger_area_pi", 1.0 / std::numbers::pi}});
  const double area = trigger_pi_area(cfg.setup, scan);
  ctx.note("minimum_area_rad", area);
  ctx.note("minimum_area_pi", area / std::numbers::pi);
}

void cmd_delay_map(Context& ctx) {
  resolve_tpe(ctx);
  const auto& cfg = ctx.config;
  const auto delays = cfg.map_delays_ps.values();
  auto areas = cfg.map_areas_pi.values();
  for (auto& a : areas) a *= std::numbers::pi;
  const auto map = delay_area_map(cfg.setup, delays, areas, cfg.threads);
  auto os = ctx.csv_stream();
  csv::write_comments(os, Summary{{"tpe_only_detected", csv::format(map.tpe_only)}});
  os << header_line({"delay_ps", "area_rad", "area_pi", "detected"});
  for (std::size_t i = 0; i < delays.size(); ++i)
    for (std::size_t j = 0; j < areas.size(); ++j)
      csv::write_row(os, std::vector<double>{delays[i], areas[j], areas[j] / std::numbers::pi,
                                             map.detected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
  ctx.write("delay_map.csv", os.str());
  Eigen::Index bi = 0, bj = 0;
  const double best = map.detected.maxCoeff(&bi, &bj);
  ctx.note("map_maximum", best);
  ctx.note("map_maximum_delay_ps", delays[static_cast<std::size_t>(bi)]);
  ctx.note("map_maximum_area_pi", areas[static_cast<std::size_t>(bj)] / std::numbers::pi);
  ctx.note("tpe_only_detected", map.tpe_only);
}

void cmd_pol_scan(Context& ctx) {
  resolve_tpe(ctx);
  const auto& cfg = ctx.config;
  const auto angles = cfg.trigger_angles_deg.values();
  const auto scan = polarization_scan(cfg.setup, angles, cfg.threads);
  write_scan(ctx, "pol_scan.csv", scan);
  const auto& v = scan.column("detected");
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  ctx.note("max_angle_deg", angles[static_cast<std::size_t>(hi - v.begin())]);
  ctx.note("min_angle_deg", angles[static_cast<std::size_t>(lo - v.begin())]);
  ctx.note("max_over_min", *hi / *lo);
}

void write_stokes(Context& ctx, const StokesResult& r) {
  auto os = ctx.csv_stream();
  os << header_line({"S0", "S1", "S2", "S3", "DOP", "DLP", "DCP"});
  csv::write_row(os, std::vector<double>{r.s[0], r.s[1], r.s[2], r.s[3], r.dop, dlp(r.s), dcp(r.s)});
  ctx.write("stokes.csv", os.str());
  ctx.note("S1", r.s[1]);
  ctx.note("S2", r.s[2]);
  ctx.note("S3", r.s[3]);
  ctx.note("DOP", r.dop);
}

void cmd_stokes(Context& ctx, const std::string& samples_path) {
  std::vector<PolarimetrySample> samples;
  if (!samples_path.empty()) {
    std::ifstream in(samples_path);
    if (!in) throw ConfigError("--samples", "cannot open '" + samples_path + "'");
    samples = read_samples_csv(in);
  } else {
    resolve_tpe(ctx);
    const auto s = emission_stokes(ctx.config.setup);
    samples = rotating_qwp_intensities(s, uniform_half_turn(ctx.config.qwp_points));
    auto os = ctx.csv_stream();
    write_samples_csv(os, samples);
    ctx.write("qwp_samples.csv", os.str());
  }
  write_stokes(ctx, stokes_from_coefficients(fourier_coefficients(samples)));
}

void cmd_hwp_scan(Context& ctx) {
  resolve_tpe(ctx);
  const auto s = emission_stokes(ctx.config.setup);
  const LinearAxis angles{0.0, 180.0, ctx.config.hwp_points};
  const auto samples = hwp_polarizer_scan(s, angles.values());
  auto os = ctx.csv_stream();
  write_samples_csv(os, samples);
  ctx.write("hwp_scan.csv", os.str());
  ctx.note("contrast", contrast(samples));
  ctx.note("DLP", dlp(s));
}

CoincidenceHistogram read_hist(const std::string& path, double rep) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open histogram");
  return read_histogram_csv(in, rep);
}

void write_hist(Context& ctx, const std::string& name, const CoincidenceHistogram& h) {
  auto os = ctx.csv_stream();
  write_histogram_csv(os, h);
  ctx.write(name, os.str());
}

void cmd_hbt(Context& ctx, const std::string& input) {
  const auto& cfg = ctx.config;
  CoincidenceHistogram h;
  if (!input.empty()) {
    h = read_hist(input, cfg.histogram.rep_period_ps);
  } else {
    h = synthesize_histograms(cfg.histogram).hbt;
    write_hist(ctx, "hbt_histogram.csv", h);
  }
  const auto g = hbt_g2(h);
  std::ostringstream rep;
  rep << "g2 = " << csv::format(g.value) << "\ng2_sigma = " << csv::format(g.sigma) << '\n';
  ctx.write("hbt.txt", rep.str());
  ctx.note("g2", g.value);
  ctx.note("g2_sigma", g.sigma);
}

void cmd_hom(Context& ctx, const std::string& co_path, const std::string& cross_path) {
  const auto& cfg = ctx.config;
  CoincidenceHistogram co, cross, hbt;
  double g2 = cfg.histogram.g2;
  if (!co_path.empty() || !cross_path.empty()) {
    if (co_path.empty() || cross_path.empty()) throw ConfigError("--co/--cross", "both histograms are required");
    co = read_hist(co_path, cfg.histogram.rep_period_ps);
    cross = read_hist(cross_path, cfg.histogram.rep_period_ps);
  } else {
    const auto set = synthesize_histograms(cfg.histogram);
    co = set.hom_co;
    cross = set.hom_cross;
    write_hist(ctx, "hom_co.csv", co);
    write_hist(ctx, "hom_cross.csv", cross);
    g2 = hbt_g2(set.hbt).value;
  }
  const auto v = hom_visibility(co, cross);
  const double m = correct_visibility(std::clamp(v.value, 0.0, 1.0), g2, cfg.splitting_ratio);
  std::ostringstream rep;
  rep << "v_raw = " << csv::format(v.value) << "\nv_raw_sigma = " << csv::format(v.sigma) << '\n'
      << "g2 = " << csv::format(g2) << "\nsplitting_ratio = " << csv::format(cfg.splitting_ratio) << '\n'
      << "m_corrected = " << csv::format(m) << '\n';
  ctx.write("hom.txt", rep.str());
  ctx.note("v_raw", v.value);
  ctx.note("v_raw_sigma", v.sigma);
  ctx.note("m_corrected", m);
}

void cmd_magneto(Context& ctx) {
  const auto& cfg = ctx.config;
  write_scan(ctx, "magneto.csv", magneto_map(cfg.setup.scheme, cfg.fields_t.values()));
}

void cmd_budget(Context& ctx) {
  const auto& cfg = ctx.config;
  auto os = ctx.csv_stream();
  write_budget_table(os, cfg.chains);
  ctx.write("budget.csv", os.str());
  for (const auto& c : cfg.chains) ctx.note(c.name + "_percent", 100.0 * chain_efficiency(c));
  const double ext = combined_extinction(cfg.extinction);
  std::ostringstream rep;
  rep << "combined_extinction = " << csv::format(ext) << '\n';
  ctx.write("extinction.txt", rep.str());
  ctx.note("combined_extinction", ext);
}

void write_manifest(Context& ctx) {
  std::ostringstream os;
  os << "command = " << ctx.command << '\n';
  os << "seed = " << ctx.config.seed << '\n';
  for (const auto& f : ctx.outputs) os << "output = " << f << '\n';
  for (const auto& [k, v] : ctx.summary) os << "result." << k << " = " << v << '\n';
  for (const auto& [k, v] : ctx.config.entries) os << k << " = " << v << '\n';
  ctx.write(ctx.command + "_manifest.txt", os.str());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Double-pulse excitation simulator and analysis suite", "dpe"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir, samples, input, co, cross;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "INI configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  const std::vector<std::pair<std::string, std::string>> commands{
      {"decay", "time-resolved PL with IRF, exponential fit and rise metric"},
      {"rabi-tpe", "XX and X emission versus TPE amplitude"},
      {"rabi-trigger", "XX emission versus trigger pulse area"},
      {"delay-map", "detected emission versus trigger delay and area"},
      {"pol-scan", "detected emission versus trigger polarization angle"},
      {"stokes", "rotating-QWP Stokes polarimetry"},
      {"hwp-scan", "HWP and polarizer intensity scan"},
      {"magneto", "transition energies versus magnetic field"},
      {"hbt", "g2(0) from a coincidence histogram"},
      {"hom", "raw and corrected HOM visibility"},
      {"budget", "collection efficiency and extinction budget"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    if (name == "stokes") sub->add_option("--samples", samples, "measured (theta_deg, intensity) CSV");
    if (name == "hbt") sub->add_option("--input", input, "measured histogram CSV");
    if (name == "hom") {
      sub->add_option("--co", co, "co-polarized histogram CSV");
      sub->add_option("--cross", cross, "cross-polarized histogram CSV");
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "dpe: " << e.what() << '\n';
    return 2;
  }

  Context ctx;
  ctx.command = app.get_subcommands().front()->get_name();
  try {
    ctx.config = load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path));
    if (!out_dir.empty()) ctx.config.out_dir = out_dir;
    if (seed) {
      ctx.config.seed = *seed;
      ctx.config.histogram.seed = *seed;
    }
    if (threads) ctx.config.threads = *threads;
  } catch (const std::invalid_argument& e) {
    err << "dpe: config error: " << e.what() << '\n';
    return 2;
  }

  try {
    const auto& c = ctx.command;
    if (c == "decay") cmd_decay(ctx);
    else if (c == "rabi-tpe") cmd_rabi_tpe(ctx);
    else if (c == "rabi-trigger") cmd_rabi_trigger(ctx);
    else if (c == "delay-map") cmd_delay_map(ctx);
    else if (c == "pol-scan") cmd_pol_scan(ctx);
    else if (c == "stokes") cmd_stokes(ctx, samples);
    else if (c == "hwp-scan") cmd_hwp_scan(ctx);
    else if (c == "magneto") cmd_magneto(ctx);
    else if (c == "hbt") cmd_hbt(ctx, input);
    else if (c == "hom") cmd_hom(ctx, co, cross);
    else if (c == "budget") cmd_budget(ctx);
    write_manifest(ctx);
  } catch (const ConfigError& e) {
    err << "dpe: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "dpe " << ctx.command << ": " << e.what() << '\n';
    return 1;
  }
  for (const auto& [k, v] : ctx.summary) out << k << " = " << v << '\n';
  return 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace dpe::cli
