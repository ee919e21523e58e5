#pragma once

// File formats: plain-text covariance matrices, INI parameter/scenario
// files, CSV tables and static SVG plots.

#include <iosfwd>
#include <string>
#include <vector>

#include "optoact/dynamics.hpp"
#include "optoact/gaussian.hpp"
#include "optoact/optomech.hpp"
#include "optoact/protocol.hpp"

namespace optoact {

inline constexpr const char* kToolVersion = "0.1.0";

/// First line n_modes, then 2n rows of 2n numbers, 17 significant digits.
void write_cm(std::ostream& os, const CM& cm);
void write_cm_file(const std::string& path, const CM& cm);

struct CmReadResult {
  CM state;
  /// Set when `force` let an asymmetric or unphysical matrix through.
  std::vector<std::string> warnings;
};

/// Rejects malformed, asymmetric (1e-8) or unphysical input unless `force`,
/// in which case the matrix is symmetrized and the problem reported.
CmReadResult read_cm(std::istream& is, bool force = false);
CmReadResult read_cm_file(const std::string& path, bool force = false);

/// First 16 hex digits of the SHA-256 of `bytes`.
std::string content_hash(const std::string& bytes);

/// Keys (with units in the name) for one unit, e.g. mass_ng = 145.
/// Applied on top of `base`; unknown keys throw naming the key.
OptomechParams apply_param_keys(OptomechParams base, const std::vector<std::pair<std::string, std::string>>& kv,
                                const std::string& section);

/// Parse a scenario INI text. Sections: common, unit1, unit2, mech_init,
/// opt_init, demon, integrator, sweep, outputs. Missing sections keep defaults.
/// `base_dir` resolves relative file paths in mech_init.
ScenarioConfig parse_scenario(const std::string& text, const std::string& base_dir = ".", bool force = false);
ScenarioConfig load_scenario(const std::string& path, bool force = false);

/// Shortest decimal that round-trips.
std::string format_double(double x);

struct CsvMeta {
  std::string config_hash;
  std::vector<std::string> extra;
};

void write_trajectory_csv(std::ostream& os, const Trajectory<double>& traj, const CsvMeta& meta);
/// One row per point: `<axis>,E_max,t_star_s` (+ theta columns for demon samples).
void write_sweep_csv(std::ostream& os, const SweepResult& sweep, const CsvMeta& meta);
/// Long format `r,t_s,E` for every recorded time of every squeezing.
void write_squeezing_series_csv(std::ostream& os, const SweepResult& sweep, const CsvMeta& meta);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

std::string svg_line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                          const std::string& y_label);

/// Heatmap of E over (t, r); each row of the sweep resampled onto a common time grid.
std::string svg_heatmap(const SweepResult& sweep, const std::string& title, int time_bins = 120);

}  // namespace optoact
