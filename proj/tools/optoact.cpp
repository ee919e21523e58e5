// optoact: command-line front end for the activation simulator.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "optoact/discord.hpp"
#include "optoact/errors.hpp"
#include "optoact/io.hpp"
#include "optoact/lyapunov.hpp"
#include "optoact/protocol.hpp"

namespace {

using namespace optoact;

const std::vector<double> kDefaultTemperatures{0.002, 0.004, 0.006, 0.008, 0.009, 0.01,
                                               0.012, 0.015, 0.02,  0.025, 0.03,  0.04};
const std::vector<double> kDefaultSqueezings{0, 0.25, 0.5, 0.75, 1, 1.25, 1.5, 1.75, 2};

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool plot = false;
  bool force = false;
  std::size_t n = 0;
  std::string cm;
  std::string partition = "1";
  int measured_mode = 1;
};

ScenarioConfig scenario(const Options& o) {
  if (o.config.empty()) return ScenarioConfig{};
  return load_scenario(o.config, o.force);
}

/// Writes `body` to --out, or stdout when no path was given.
void emit(const Options& o, const std::string& body) {
  if (o.out.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + o.out + "'");
  f << body;
}

std::string sibling(const std::string& path, const std::string& suffix, const std::string& ext) {
  std::filesystem::path p(path);
  const auto stem = p.stem().string();
  return (p.parent_path() / (stem + suffix + ext)).string();
}

void emit_plot(const Options& o, const std::string& svg) {
  if (!o.plot) return;
  const std::string path = sibling(o.out, "", ".svg");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << svg;
  std::cerr << "wrote " << path << '\n';
}

void check_plot(const Options& o) {
  if (o.plot && o.out.empty()) throw ValidationError("--plot needs --out to place the SVG next to the CSV");
}

CsvMeta meta(const ScenarioConfig& cfg, std::vector<std::string> extra = {}) {
  return {cfg.config_hash, std::move(extra)};
}

std::vector<int> parse_partition(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream is(t);
  std::vector<int> out;
  for (std::string tok; is >> tok;) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw ValidationError("--partition: expected mode indices, got '" + tok + "'");
    }
  }
  return out;
}

CM read_input_cm(const Options& o) {
  auto read = read_cm_file(o.cm, o.force);
  for (const auto& w : read.warnings) std::cerr << "warning: " << w << '\n';
  return read.state;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_steady_state(const Options& o) {
  const auto cfg = scenario(o);
  const auto dyn = compose_pair(unit_dynamics(cfg.units[0]), unit_dynamics(cfg.units[1]));
  const CM ss = steady_state<double>(dyn.drift.entries, dyn.diffusion.entries);
  std::ostringstream os;
  write_cm(os, ss);
  emit(o, os.str());
  std::cerr << "E_pair1=" << format_double(log_negativity(reduce(ss, {0, 2}), {1}))
            << " E_mirrors_vs_fields=" << format_double(log_negativity(ss, {2, 3})) << '\n';
  return 0;
}

std::string trajectory_svg(const Trajectory<double>& traj, const std::string& title) {
  std::vector<Series> series;
  for (std::size_t m = 0; m < traj.measure_names.size(); ++m) {
    if (traj.measure_names[m] == kMeasureNuMin) continue;
    series.push_back({traj.measure_names[m], traj.times, traj.measure_values[m]});
  }
  return svg_line_plot(series, title, "t [s]", "value");
}

int cmd_evolve(const Options& o) {
  check_plot(o);
  const auto cfg = scenario(o);
  const auto run = run_activation(cfg);
  print_warnings(run.warnings);
  std::ostringstream os;
  write_trajectory_csv(os, run.trajectory, meta(cfg));
  emit(o, os.str());
  emit_plot(o, trajectory_svg(run.trajectory, "covariance evolution"));
  return 0;
}

int cmd_activate(const Options& o) {
  check_plot(o);
  auto cfg = scenario(o);
  cfg.measures = {kMeasureSplit};
  auto control = cfg;
  control.strip_mech_correlations = true;

  const CM mech = mechanical_state(cfg);
  const double d0 = gaussian_discord(mech, 1);
  const double e0 = log_negativity(mech, {1});
  const auto run = run_activation(cfg);
  const auto ctl = run_activation(control);
  print_warnings(run.warnings);
  const auto best = max_measure_over_window(run.trajectory, kMeasureSplit);
  const auto best_ctl = max_measure_over_window(ctl.trajectory, kMeasureSplit);

  const auto* col = run.trajectory.column(kMeasureSplit);
  const auto* ccol = ctl.trajectory.column(kMeasureSplit);
  std::ostringstream os;
  os << "# optoact " << kToolVersion << " config_hash=" << (cfg.config_hash.empty() ? "default" : cfg.config_hash)
     << '\n'
     << "# initial mechanics: E=" << format_double(e0) << " D=" << format_double(d0) << '\n'
     << "run,t_s," << kMeasureSplit << '\n';
  for (std::size_t k = 0; k < run.trajectory.size(); ++k) {
    os << "initial," << format_double(run.trajectory.times[k]) << ',' << format_double((*col)[k]) << '\n';
  }
  for (std::size_t k = 0; k < ctl.trajectory.size(); ++k) {
    os << "stripped," << format_double(ctl.trajectory.times[k]) << ',' << format_double((*ccol)[k]) << '\n';
  }
  emit(o, os.str());
  std::cerr << "initial mechanics: E=" << format_double(e0) << " D=" << format_double(d0) << '\n'
            << "max E(mirrors:fields): initial=" << format_double(best.value)
            << " stripped=" << format_double(best_ctl.value) << '\n';
  emit_plot(o, svg_line_plot({{"initial", run.trajectory.times, *col}, {"stripped", ctl.trajectory.times, *ccol}},
                             "activation", "t [s]", "E(mirrors:fields)"));
  return 0;
}

int cmd_sweep_temperature(const Options& o) {
  check_plot(o);
  const auto cfg = scenario(o);
  const auto temps = cfg.temperatures.empty() ? kDefaultTemperatures : cfg.temperatures;
  const auto sweep = temperature_sweep(cfg, temps);
  std::ostringstream os;
  write_sweep_csv(os, sweep, meta(cfg));
  emit(o, os.str());
  std::vector<double> x, y;
  for (const auto& p : sweep.points) x.push_back(p.axis), y.push_back(p.e_max);
  emit_plot(o, svg_line_plot({{"max E(mirror:field)", x, y}}, "temperature sweep", "T [K]", "E_max"));
  return 0;
}

int cmd_demon_sample(const Options& o) {
  check_plot(o);
  if (!o.seed) throw ValidationError("demon-sample requires --seed");
  const auto cfg = scenario(o);
  const std::size_t n = o.n ? o.n : (cfg.demon.count ? cfg.demon.count : 100);
  const auto sweep = demon_sample(cfg, n, *o.seed);
  std::ostringstream os;
  write_sweep_csv(os, sweep, meta(cfg));
  emit(o, os.str());
  std::cerr << "min E_max over " << n << " samples = " << format_double(sweep.min_e_max()) << '\n';
  std::vector<double> x, y;
  for (const auto& p : sweep.points) x.push_back(p.axis), y.push_back(p.e_max);
  emit_plot(o, svg_line_plot({{"max E(mirrors:fields)", x, y}}, "demon samples", "sample", "E_max"));
  return 0;
}

int cmd_sweep_squeezing(const Options& o) {
  check_plot(o);
  const auto cfg = scenario(o);
  const auto rs = cfg.squeezings.empty() ? kDefaultSqueezings : cfg.squeezings;
  const auto sweep = squeezing_sweep(cfg, rs);
  std::ostringstream os;
  write_sweep_csv(os, sweep, meta(cfg));
  emit(o, os.str());
  if (!o.out.empty()) {
    const std::string series_path = sibling(o.out, "_series", ".csv");
    std::ofstream f(series_path, std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + series_path + "'");
    write_squeezing_series_csv(f, sweep, meta(cfg));
    std::cerr << "wrote " << series_path << '\n';
  }
  emit_plot(o, svg_heatmap(sweep, "E(mirror:field) over (t, r)"));
  return 0;
}

int cmd_discord(const Options& o) {
  const CM cm = read_input_cm(o);
  std::cout << format_double(gaussian_discord(cm, o.measured_mode)) << '\n';
  return 0;
}

int cmd_logneg(const Options& o) {
  const CM cm = read_input_cm(o);
  std::cout << format_double(log_negativity(cm, parse_partition(o.partition))) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian optomechanical entanglement-activation simulator"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "scenario INI file (defaults: reference device)")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output path (stdout when omitted)");
    sub->add_flag("--plot", o.plot, "also write an SVG next to --out");
    sub->add_flag("--force", o.force, "accept marginally unphysical imported matrices");
  };
  auto cm_input = [&o](CLI::App* sub) {
    sub->add_option("--cm", o.cm, "covariance matrix file")->required()->check(CLI::ExistingFile);
    sub->add_flag("--force", o.force, "accept marginally unphysical input");
  };

  std::vector<std::pair<CLI::App*, int (*)(const Options&)>> commands;
  auto* ss = app.add_subcommand("steady-state", "stationary covariance matrix of the unit pair");
  common(ss);
  commands.emplace_back(ss, cmd_steady_state);
  auto* ev = app.add_subcommand("evolve", "trajectory of the configured measures");
  common(ev);
  commands.emplace_back(ev, cmd_evolve);
  auto* st = app.add_subcommand("sweep-temperature", "max-window E(mirror:field) versus temperature");
  common(st);
  commands.emplace_back(st, cmd_sweep_temperature);
  auto* ac = app.add_subcommand("activate", "activation run against its correlation-stripped control");
  common(ac);
  commands.emplace_back(ac, cmd_activate);
  auto* ds = app.add_subcommand("demon-sample", "seeded random local rotations of the mechanical register");
  common(ds);
  ds->add_option("--seed", o.seed, "generator seed (required)");
  ds->add_option("-n", o.n, "number of samples")->check(CLI::PositiveNumber);
  commands.emplace_back(ds, cmd_demon_sample);
  auto* sq = app.add_subcommand("sweep-squeezing", "E(mirror:field) over time for squeezed optics");
  common(sq);
  commands.emplace_back(sq, cmd_sweep_squeezing);
  auto* di = app.add_subcommand("discord", "Gaussian discord of a two-mode matrix file");
  cm_input(di);
  di->add_option("--measured-mode", o.measured_mode, "zero-based index of the measured mode");
  commands.emplace_back(di, cmd_discord);
  auto* ln = app.add_subcommand("logneg", "log-negativity of a matrix file");
  cm_input(ln);
  ln->add_option("--partition", o.partition, "zero-based modes on one side, e.g. \"2,3\"");
  commands.emplace_back(ln, cmd_logneg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (const auto& [sub, fn] : commands) {
      if (sub->parsed()) return fn(o);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
