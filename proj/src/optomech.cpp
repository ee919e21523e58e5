#include "optoact/optomech.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "optoact/errors.hpp"
#include "optoact/lyapunov.hpp"

namespace optoact {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

void require(bool ok, const char* field, const char* rule) {
  if (!ok) throw ValidationError(std::string("OptomechParams.") + field + " " + rule);
}

/// Real nonnegative roots of u ((u - d)^2 + 1) = rhs, Newton-polished.
/// u is the mean-field detuning shift in units of kappa.
std::vector<double> shift_roots(double d, double rhs) {
  // u^3 - 2 d u^2 + (1 + d^2) u - rhs = 0
  Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
  companion(0, 0) = 2 * d;
  companion(0, 1) = -(1 + d * d);
  companion(0, 2) = rhs;
  companion(1, 0) = 1;
  companion(2, 1) = 1;
  Eigen::EigenSolver<Eigen::Matrix3d> es(companion, false);
  const double scale = std::max({1.0, std::abs(d), std::cbrt(std::abs(rhs))});
  std::vector<double> roots;
  for (int i = 0; i < 3; ++i) {
    const auto z = es.eigenvalues()(i);
    if (std::abs(z.imag()) > 1e-6 * scale) continue;
    double u = z.real();
    for (int it = 0; it < 50; ++it) {
      const double f = u * ((u - d) * (u - d) + 1) - rhs;
      const double df = 3 * u * u - 4 * d * u + 1 + d * d;
      if (df == 0) break;
      const double step = f / df;
      u -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(u))) break;
    }
    if (u < -1e-12 * scale) continue;
    u = std::max(0.0, u);
    const bool dup = std::any_of(roots.begin(), roots.end(),
                                 [&](double r) { return std::abs(r - u) <= 1e-9 * std::max(1.0, std::abs(u)); });
    if (!dup) roots.push_back(u);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace

OptomechParams OptomechParams::reference_device() {
  OptomechParams p;
  p.mass = 145e-12;  // 145 ng
  p.mech_frequency = kTwoPi * 947e3;
  p.mech_damping = kTwoPi * 140;
  p.cavity_decay = kTwoPi * 215e3;
  p.cavity_length = 25e-3;
  p.pump_power = 11e-3;
  p.wavelength = 1064e-9;
  p.detuning_mode = DetuningMode::explicit_value;
  p.detuning = p.mech_frequency;
  p.bath_temperature = 0.4;
  return p;
}

void OptomechParams::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  require(finite(mass) && mass > 0, "mass", "must be > 0");
  require(finite(mech_frequency) && mech_frequency > 0, "mech_frequency", "must be > 0");
  require(finite(mech_damping) && mech_damping > 0, "mech_damping", "must be > 0");
  require(mech_damping < 0.1 * mech_frequency, "mech_damping", "must be << mech_frequency (quality factor > 10)");
  require(finite(cavity_decay) && cavity_decay > 0, "cavity_decay", "must be > 0");
  require(finite(cavity_length) && cavity_length > 0, "cavity_length", "must be > 0");
  require(finite(pump_power) && pump_power >= 0, "pump_power", "must be >= 0");
  require(finite(wavelength) && wavelength > 0, "wavelength", "must be > 0");
  require(finite(detuning), "detuning", "must be finite");
  require(finite(bare_detuning), "bare_detuning", "must be finite");
  require(finite(bath_temperature) && bath_temperature >= 0, "bath_temperature", "must be >= 0");
  if (effective_coupling) {
    require(finite(*effective_coupling) && *effective_coupling >= 0, "effective_coupling", "must be >= 0");
  }
}

std::string OptomechParams::describe() const {
  std::ostringstream os;
  os.precision(10);
  os << "mass_kg=" << mass << " mech_frequency_rad_s=" << mech_frequency << " mech_damping_rad_s=" << mech_damping
     << " cavity_decay_rad_s=" << cavity_decay << " cavity_length_m=" << cavity_length
     << " pump_power_W=" << pump_power << " wavelength_m=" << wavelength << " detuning_mode="
     << (detuning_mode == DetuningMode::explicit_value ? "explicit" : "self_consistent");
  if (detuning_mode == DetuningMode::explicit_value) {
    os << " detuning_rad_s=" << detuning;
  } else {
    os << " bare_detuning_rad_s=" << bare_detuning;
  }
  os << " bath_temperature_K=" << bath_temperature
     << " diffusion_form=" << (diffusion_form == DiffusionForm::quantum ? "quantum" : "high_temperature");
  if (effective_coupling) {
    os << " effective_coupling_rad_s=" << *effective_coupling;
  } else {
    os << " effective_coupling=none";
  }
  return os.str();
}

double laser_frequency(const OptomechParams& p) { return kTwoPi * constants::speed_of_light / p.wavelength; }

double radiation_pressure_coupling(const OptomechParams& p) {
  // omega_C differs from omega_L by the detuning, negligible on optical scales
  // but kept when the bare detuning is known.
  const double omega_c =
      laser_frequency(p) + (p.detuning_mode == DetuningMode::self_consistent ? p.bare_detuning : 0.0);
  return omega_c / p.cavity_length;
}

double single_photon_coupling(const OptomechParams& p) {
  return radiation_pressure_coupling(p) * std::sqrt(constants::hbar / (2 * p.mass * p.mech_frequency));
}

double drive_amplitude(const OptomechParams& p) {
  p.validate();
  return std::sqrt(2 * p.cavity_decay * p.pump_power / (constants::hbar * laser_frequency(p)));
}

SteadyField steady_field(const OptomechParams& p) {
  const double e = drive_amplitude(p);
  const double kappa = p.cavity_decay;
  if (p.detuning_mode == DetuningMode::explicit_value) {
    return {e / std::complex<double>(kappa, p.detuning), p.detuning};
  }

  // |c_s|^2 ((kappa^2 + (delta - beta |c_s|^2)^2) = E^2 with beta the
  // mean-field detuning shift per photon; solved for u = beta |c_s|^2 / kappa.
  const double chi = radiation_pressure_coupling(p);
  const double beta = constants::hbar * chi * chi / (p.mass * p.mech_frequency * p.mech_frequency);
  const double d = p.bare_detuning / kappa;
  const double rhs = beta * e * e / (kappa * kappa * kappa);
  const auto roots = shift_roots(d, rhs);

  std::vector<SteadyField> candidates;
  for (double u : roots) {
    const double delta = p.bare_detuning - u * kappa;
    candidates.push_back({e / std::complex<double>(kappa, delta), delta});
  }
  for (const auto& c : candidates) {
    if (stability(drift_matrix(p, c))) return c;
  }
  std::ostringstream os;
  os << "self-consistent mean field has no stable root; roots |c_s| =";
  if (candidates.empty()) os << " (none real)";
  for (const auto& c : candidates) os << " " << std::abs(c.amplitude) << " (Delta=" << c.detuning << ")";
  throw MultistabilityError(os.str());
}

double fluctuation_coupling(const OptomechParams& p, const SteadyField& field) {
  if (!p.effective_coupling) return single_photon_coupling(p);
  const double amp = std::abs(field.amplitude);
  return amp > 0 ? *p.effective_coupling / amp : 0.0;
}

DriftMatrix drift_matrix(const OptomechParams& p) { return drift_matrix(p, steady_field(p)); }

DriftMatrix drift_matrix(const OptomechParams& p, const SteadyField& field) {
  p.validate();
  const double g = fluctuation_coupling(p, field);
  const double re = 2 * g * field.amplitude.real();
  const double im = 2 * g * field.amplitude.imag();
  const double wm = p.mech_frequency;
  const double kappa = p.cavity_decay;
  const double delta = field.detuning;
  Eigen::MatrixXd k(4, 4);
  // clang-format off
  k <<  0,   wm,               0,      0,
       -wm, -p.mech_damping,   re,     im,
       -im,  0,               -kappa,  delta,
        re,  0,               -delta, -kappa;
  // clang-format on
  return {k};
}

double thermal_occupation(double temperature, double frequency) {
  if (temperature < 0) throw ValidationError("thermal_occupation: temperature must be >= 0");
  if (!(frequency > 0)) throw ValidationError("thermal_occupation: frequency must be > 0");
  if (temperature == 0) return 0.0;
  return 1.0 / std::expm1(constants::hbar * frequency / (constants::boltzmann * temperature));
}

DiffusionMatrix diffusion_matrix(const OptomechParams& p) {
  if (p.bath_temperature < 0) throw ValidationError("diffusion_matrix: bath temperature must be >= 0");
  p.validate();
  double d_mech = 0;
  if (p.diffusion_form == DiffusionForm::quantum) {
    d_mech = p.mech_damping * (2 * thermal_occupation(p.bath_temperature, p.mech_frequency) + 1);
  } else {
    d_mech = 2 * p.mech_damping * constants::boltzmann * p.bath_temperature / (constants::hbar * p.mech_frequency);
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 4);
  d(1, 1) = d_mech;
  d(2, 2) = p.cavity_decay;
  d(3, 3) = p.cavity_decay;
  return {d};
}

bool stability(const DriftMatrix& k) { return is_hurwitz<double>(k.entries); }

std::vector<int> pair_quadrature_indices(int unit) {
  if (unit == 0) return {0, 1, 4, 5};
  if (unit == 1) return {2, 3, 6, 7};
  throw ValidationError("pair_quadrature_indices: unit must be 0 or 1");
}

UnitDynamics compose_pair(const UnitDynamics& a, const UnitDynamics& b) {
  for (const auto* m : {&a.drift.entries, &a.diffusion.entries, &b.drift.entries, &b.diffusion.entries}) {
    if (m->rows() != 4 || m->cols() != 4) throw ValidationError("compose_pair: unit matrices must be 4x4");
  }
  UnitDynamics out{{Eigen::MatrixXd::Zero(8, 8)}, {Eigen::MatrixXd::Zero(8, 8)}};
  const UnitDynamics* units[2] = {&a, &b};
  for (int u = 0; u < 2; ++u) {
    const auto idx = pair_quadrature_indices(u);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        out.drift.entries(idx[i], idx[j]) = units[u]->drift.entries(i, j);
        out.diffusion.entries(idx[i], idx[j]) = units[u]->diffusion.entries(i, j);
      }
    }
  }
  return out;
}

UnitDynamics unit_dynamics(const OptomechParams& p) { return {drift_matrix(p), diffusion_matrix(p)}; }

}  // namespace optoact
