#include "optoact/io.hpp"

#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "optoact/errors.hpp"

namespace optoact {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_number(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  double x = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(x)) {
    throw ValidationError(where + ": expected a finite number, got '" + s + "'");
  }
  return x;
}

std::uint64_t parse_unsigned(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError(where + ": expected a nonnegative integer, got '" + s + "'");
  }
  return x;
}

bool parse_bool(const std::string& raw, const std::string& where) {
  const std::string s = lower(trim(raw));
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw ValidationError(where + ": expected true/false, got '" + trim(raw) + "'");
}

std::vector<double> parse_list(const std::string& raw, const std::string& where) {
  std::string s = raw;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream is(s);
  std::vector<double> out;
  for (std::string tok; is >> tok;) out.push_back(parse_number(tok, where));
  if (out.empty()) throw ValidationError(where + ": empty list");
  return out;
}

std::vector<std::string> parse_words(const std::string& raw) {
  std::string s = raw;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Section name -> ordered key/value pairs, rejecting duplicates and top-level keys.
std::map<std::string, KeyValues> parse_ini(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  std::map<std::string, KeyValues> out;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ValidationError("config: key '" + section + "' must live inside a [section]");
    }
    KeyValues& kv = out[section];
    for (const auto& [key, value] : body) kv.emplace_back(key, value.data());
  }
  // read_ini drops sections without keys; keep their names for validation.
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    const std::string t = trim(line);
    if (t.size() > 2 && t.front() == '[' && t.back() == ']') out.try_emplace(trim(t.substr(1, t.size() - 2)));
  }
  return out;
}

[[noreturn]] void unknown_key(const std::string& section, const std::string& key) {
  throw ValidationError("config: unknown key '" + key + "' in [" + section + "]");
}

std::string format_17(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_meta(std::ostream& os, const CsvMeta& meta) {
  os << "# optoact " << kToolVersion << " config_hash=" << (meta.config_hash.empty() ? "default" : meta.config_hash)
     << '\n';
  for (const auto& line : meta.extra) os << "# " << line << '\n';
}

}  // namespace

void write_cm(std::ostream& os, const CM& cm) {
  os << cm.modes() << '\n';
  for (Eigen::Index i = 0; i < cm.dim(); ++i) {
    for (Eigen::Index j = 0; j < cm.dim(); ++j) {
      if (j) os << ' ';
      os << format_17(cm(i, j));
    }
    os << '\n';
  }
}

void write_cm_file(const std::string& path, const CM& cm) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  write_cm(f, cm);
}

CmReadResult read_cm(std::istream& is, bool force) {
  std::string tok;
  if (!(is >> tok)) throw ValidationError("matrix file: missing mode count");
  const auto n = parse_unsigned(tok, "matrix file mode count");
  if (n < 1 || n > 64) throw ValidationError("matrix file: mode count must be in [1, 64]");
  const auto dim = static_cast<Eigen::Index>(2 * n);
  Eigen::MatrixXd m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (!(is >> tok)) throw ValidationError("matrix file: expected " + std::to_string(dim * dim) + " entries");
      m(i, j) = parse_number(tok, "matrix file entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
  if (is >> tok) throw ValidationError("matrix file: trailing content '" + tok + "'");

  CmReadResult out{CM(Eigen::MatrixXd::Identity(dim, dim) / 2), {}};
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (asym > kSymmetryTol * scale) {
    if (!force) throw ValidationError("matrix file: matrix is not symmetric (max |M - M^T| = " + format_double(asym) + ")");
    out.warnings.push_back("forced: symmetrized input with max |M - M^T| = " + format_double(asym));
    m = ((m + m.transpose()) / 2).eval();
  }
  out.state = CM(m);
  if (!check_physical(out.state)) {
    if (!force) throw ValidationError("matrix file: matrix violates the uncertainty principle");
    out.warnings.push_back("forced: accepted an unphysical covariance matrix");
  }
  return out;
}

CmReadResult read_cm_file(const std::string& path, bool force) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read matrix file '" + path + "'");
  return read_cm(f, force);
}

std::string content_hash(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 digest failed");
  }
  std::ostringstream os;
  for (unsigned i = 0; i < 8 && i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

OptomechParams apply_param_keys(OptomechParams p, const KeyValues& kv, const std::string& section) {
  for (const auto& [key, value] : kv) {
    const std::string where = "[" + section + "] " + key;
    if (key == "mass_ng") {
      p.mass = parse_number(value, where) * 1e-12;
    } else if (key == "mech_freq_khz_over_2pi") {
      p.mech_frequency = kTwoPi * parse_number(value, where) * 1e3;
    } else if (key == "mech_freq_krad_per_s") {
      p.mech_frequency = parse_number(value, where) * 1e3;
    } else if (key == "mech_damping_hz_over_2pi") {
      p.mech_damping = kTwoPi * parse_number(value, where);
    } else if (key == "cavity_decay_khz_over_2pi") {
      p.cavity_decay = kTwoPi * parse_number(value, where) * 1e3;
    } else if (key == "cavity_length_mm") {
      p.cavity_length = parse_number(value, where) * 1e-3;
    } else if (key == "pump_power_mw") {
      p.pump_power = parse_number(value, where) * 1e-3;
    } else if (key == "wavelength_nm") {
      p.wavelength = parse_number(value, where) * 1e-9;
    } else if (key == "detuning_mode") {
      const auto v = lower(trim(value));
      if (v == "explicit") {
        p.detuning_mode = DetuningMode::explicit_value;
      } else if (v == "self_consistent") {
        p.detuning_mode = DetuningMode::self_consistent;
      } else {
        throw ValidationError(where + ": expected explicit or self_consistent");
      }
    } else if (key == "detuning_over_mech_freq") {
      // Resolved against the final mech frequency below.
      continue;
    } else if (key == "bare_detuning_khz_over_2pi") {
      p.bare_detuning = kTwoPi * parse_number(value, where) * 1e3;
    } else if (key == "bath_temp_K") {
      p.bath_temperature = parse_number(value, where);
    } else if (key == "diffusion_form") {
      const auto v = lower(trim(value));
      if (v == "quantum") {
        p.diffusion_form = DiffusionForm::quantum;
      } else if (v == "high_temperature" || v == "high-t-form" || v == "high_t") {
        p.diffusion_form = DiffusionForm::high_temperature;
      } else {
        throw ValidationError(where + ": expected quantum or high_temperature");
      }
    } else if (key == "effective_coupling_khz_over_2pi") {
      if (lower(trim(value)) == "none") {
        p.effective_coupling.reset();
      } else {
        p.effective_coupling = kTwoPi * parse_number(value, where) * 1e3;
      }
    } else {
      unknown_key(section, key);
    }
  }
  // Detuning is given relative to omega_m, so apply it after any frequency change.
  bool detuning_set = false;
  for (const auto& [key, value] : kv) {
    if (key == "detuning_over_mech_freq") {
      p.detuning = parse_number(value, "[" + section + "] " + key) * p.mech_frequency;
      detuning_set = true;
    }
  }
  if (!detuning_set && p.detuning_mode == DetuningMode::explicit_value) {
    for (const auto& [key, value] : kv) {
      if (key == "mech_freq_khz_over_2pi" || key == "mech_freq_krad_per_s") p.detuning = p.mech_frequency;
    }
  }
  p.validate();
  return p;
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& base_dir, bool force) {
  const auto ini = parse_ini(text);
  static const std::set<std::string> sections{"common", "unit1",      "unit2", "mech_init", "opt_init",
                                              "demon",  "integrator", "sweep", "outputs"};
  for (const auto& [name, kv] : ini) {
    if (!sections.count(name)) throw ValidationError("config: unknown section [" + name + "]");
  }
  auto section = [&](const std::string& name) -> const KeyValues& {
    static const KeyValues empty;
    const auto it = ini.find(name);
    return it == ini.end() ? empty : it->second;
  };

  ScenarioConfig cfg;
  cfg.config_hash = content_hash(text);

  // [common] applies to both units, [unitN] overrides per unit.
  for (int u = 0; u < 2; ++u) {
    KeyValues merged = section("common");
    const auto& own = section(u == 0 ? "unit1" : "unit2");
    merged.insert(merged.end(), own.begin(), own.end());
    cfg.units[u] = apply_param_keys(OptomechParams::reference_device(), merged, u == 0 ? "unit1" : "unit2");
  }

  {
    const auto& kv = section("mech_init");
    std::string type = "thermal";
    std::map<std::string, std::string> vals;
    for (const auto& [k, v] : kv) {
      if (k == "type") {
        type = lower(trim(v));
      } else if (k == "temperature_K" || k == "path" || k == "target_occupation" || k == "strength" ||
                 k == "strip_correlations") {
        vals[k] = v;
      } else {
        unknown_key("mech_init", k);
      }
    }
    auto get = [&](const std::string& k, double def) {
      return vals.count(k) ? parse_number(vals[k], "[mech_init] " + k) : def;
    };
    if (vals.count("strip_correlations")) {
      cfg.strip_mech_correlations = parse_bool(vals["strip_correlations"], "[mech_init] strip_correlations");
    }
    if (type == "thermal") {
      cfg.mech = ThermalInit{get("temperature_K", cfg.units[0].bath_temperature)};
    } else if (type == "separable_discorded") {
      cfg.mech = SeparableDiscordedInit{get("target_occupation", 12), get("strength", 1)};
    } else if (type == "file") {
      if (!vals.count("path")) throw ValidationError("config: [mech_init] type = file needs key 'path'");
      std::filesystem::path path = trim(vals["path"]);
      if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
      auto read = read_cm_file(path.string(), force);
      cfg.mech = ExplicitInit{std::move(read.state), path.string()};
    } else {
      throw ValidationError("config: [mech_init] type must be thermal, file or separable_discorded");
    }
  }

  {
    std::string type = "coherent";
    double r = 0, phase = 0;
    for (const auto& [k, v] : section("opt_init")) {
      if (k == "type") {
        type = lower(trim(v));
      } else if (k == "r") {
        r = parse_number(v, "[opt_init] r");
      } else if (k == "phase_rad") {
        phase = parse_number(v, "[opt_init] phase_rad");
      } else {
        unknown_key("opt_init", k);
      }
    }
    if (type == "coherent" || type == "vacuum") {
      cfg.optics = CoherentOptics{};
    } else if (type == "squeezed") {
      cfg.optics = SqueezedOptics{r, phase};
    } else {
      throw ValidationError("config: [opt_init] type must be coherent, vacuum or squeezed");
    }
  }

  for (const auto& [k, v] : section("demon")) {
    if (k == "angles_rad") {
      const auto a = parse_list(v, "[demon] angles_rad");
      if (a.size() != 2) throw ValidationError("config: [demon] angles_rad needs exactly two angles");
      cfg.demon.angles = std::array<double, 2>{a[0], a[1]};
    } else if (k == "count") {
      cfg.demon.count = parse_unsigned(v, "[demon] count");
    } else if (k == "seed") {
      cfg.demon.seed = parse_unsigned(v, "[demon] seed");
    } else {
      unknown_key("demon", k);
    }
  }

  for (const auto& [k, v] : section("integrator")) {
    const std::string where = "[integrator] " + k;
    if (k == "t_end_s") {
      cfg.integrator.t_end = parse_number(v, where);
    } else if (k == "dt_max_s") {
      cfg.integrator.dt_max = parse_number(v, where);
    } else if (k == "rel_tol") {
      cfg.integrator.rel_tol = parse_number(v, where);
    } else if (k == "abs_tol") {
      cfg.integrator.abs_tol = parse_number(v, where);
    } else if (k == "record_stride") {
      cfg.integrator.record_stride = static_cast<int>(parse_unsigned(v, where));
    } else if (k == "adaptive") {
      cfg.integrator.adaptive = parse_bool(v, where);
    } else if (k == "window") {
      const auto w = lower(trim(v));
      if (w == "steady_state") {
        cfg.window = WindowRule::steady_state;
      } else if (w == "full") {
        cfg.window = WindowRule::full;
      } else {
        throw ValidationError(where + ": expected steady_state or full");
      }
    } else {
      unknown_key("integrator", k);
    }
  }

  for (const auto& [k, v] : section("sweep")) {
    if (k == "temperatures_K") {
      cfg.temperatures = parse_list(v, "[sweep] temperatures_K");
    } else if (k == "squeezing_r") {
      cfg.squeezings = parse_list(v, "[sweep] squeezing_r");
    } else {
      unknown_key("sweep", k);
    }
  }

  for (const auto& [k, v] : section("outputs")) {
    if (k == "measures") {
      cfg.measures = parse_words(v);
      if (cfg.measures.empty()) throw ValidationError("config: [outputs] measures is empty");
    } else {
      unknown_key("outputs", k);
    }
  }

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path, bool force) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_scenario(ss.str(), dir.empty() ? "." : dir.string(), force);
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory<double>& traj, const CsvMeta& meta) {
  write_meta(os, meta);
  os << "t_s";
  for (const auto& name : traj.measure_names) os << ',' << name;
  os << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << format_double(traj.times[k]);
    for (const auto& col : traj.measure_values) os << ',' << format_double(col[k]);
    os << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep, const CsvMeta& meta) {
  CsvMeta m = meta;
  if (sweep.seed) m.extra.insert(m.extra.begin(), "seed=" + std::to_string(*sweep.seed));
  write_meta(os, m);
  const bool angles = !sweep.points.empty() && !sweep.points.front().angles.empty();
  os << sweep.axis_name << ",E_max,t_star_s";
  if (angles) os << ",theta1_rad,theta2_rad";
  os << '\n';
  for (const auto& p : sweep.points) {
    os << format_double(p.axis) << ',' << format_double(p.e_max) << ',' << format_double(p.t_star);
    for (double a : p.angles) os << ',' << format_double(a);
    os << '\n';
  }
}

void write_squeezing_series_csv(std::ostream& os, const SweepResult& sweep, const CsvMeta& meta) {
  write_meta(os, meta);
  os << "r,t_s,E\n";
  for (const auto& p : sweep.points) {
    for (std::size_t k = 0; k < p.times.size(); ++k) {
      os << format_double(p.axis) << ',' << format_double(p.times[k]) << ',' << format_double(p.series[k]) << '\n';
    }
  }
}

namespace {

constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;

struct Range {
  double lo = 0, hi = 1;
};

Range padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double d = lo == 0 ? 1 : std::abs(lo) * 0.1;
    return {lo - d, hi + d};
  }
  return {lo, hi};
}

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(4) << x;
  return os.str();
}

std::string fixed2(double x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << x;
  return os.str();
}

void axes(std::ostream& os, const Range& xr, const Range& yr, const std::string& title, const std::string& xl,
          const std::string& yl) {
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#000\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
     << "</text>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << xml_escape(xl) << "</text>\n";
  os << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
     << kTop + ph / 2 << ")\">" << xml_escape(yl) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = i / 4.0;
    const double x = kLeft + fx * pw;
    const double y = kTop + ph - fx * ph;
    os << "<text x=\"" << fixed2(x) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << num(xr.lo + fx * (xr.hi - xr.lo)) << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed2(y + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
       << num(yr.lo + fx * (yr.hi - yr.lo)) << "</text>\n";
  }
}

}  // namespace

std::string svg_line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                          const std::string& y_label) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const auto& s : series) {
    for (double x : s.x) xlo = std::min(xlo, x), xhi = std::max(xhi, x);
    for (double y : s.y) ylo = std::min(ylo, y), yhi = std::max(yhi, y);
  }
  if (!std::isfinite(xlo)) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  const Range xr = padded(xlo, xhi), yr = padded(std::min(0.0, ylo), yhi);
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
     << kW << ' ' << kH << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  axes(os, xr, yr, title, x_label, y_label);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = colors[i % std::size(colors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      const double x = kLeft + (s.x[k] - xr.lo) / (xr.hi - xr.lo) * pw;
      const double y = kTop + ph - (s.y[k] - yr.lo) / (yr.hi - yr.lo) * ph;
      os << (k ? " " : "") << fixed2(x) << ',' << fixed2(y);
    }
    os << "\"/>\n";
    os << "<text x=\"" << kW - kRight - 8 << "\" y=\"" << kTop + 16 + 15 * i << "\" text-anchor=\"end\" font-size=\"12\" fill=\""
       << color << "\">" << xml_escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string svg_heatmap(const SweepResult& sweep, const std::string& title, int time_bins) {
  if (sweep.points.empty()) throw ValidationError("svg_heatmap: empty sweep");
  if (time_bins < 2) throw ValidationError("svg_heatmap: need at least two time bins");
  double t_hi = 0, e_hi = 0;
  for (const auto& p : sweep.points) {
    if (!p.times.empty()) t_hi = std::max(t_hi, p.times.back());
    for (double e : p.series) e_hi = std::max(e_hi, e);
  }
  if (!(t_hi > 0)) t_hi = 1;
  if (!(e_hi > 0)) e_hi = 1;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  const auto rows = sweep.points.size();
  const double cw = pw / time_bins, ch = ph / static_cast<double>(rows);
  const Range yr = padded(sweep.points.front().axis, sweep.points.back().axis);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
     << kW << ' ' << kH << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& p = sweep.points[r];
    std::size_t k = 0;
    for (int b = 0; b < time_bins; ++b) {
      // Sample-and-hold onto the common grid.
      const double t = (b + 0.5) / time_bins * t_hi;
      while (k + 1 < p.times.size() && p.times[k + 1] <= t) ++k;
      const double e = p.series.empty() ? 0.0 : (t > p.times.back() ? p.series.back() : p.series[k]);
      const int shade = static_cast<int>(std::lround(255 * (1 - std::clamp(e / e_hi, 0.0, 1.0))));
      os << "<rect x=\"" << fixed2(kLeft + b * cw) << "\" y=\"" << fixed2(kTop + ph - (r + 1) * ch) << "\" width=\""
         << fixed2(cw + 0.3) << "\" height=\"" << fixed2(ch + 0.3) << "\" fill=\"rgb(255," << shade << ',' << shade
         << ")\"/>\n";
    }
  }
  axes(os, {0, t_hi}, yr, title + " (max E = " + num(e_hi) + ")", "t [s]", "r");
  os << "</svg>\n";
  return os.str();
}

}  // namespace optoact
