#pragma once

// Linearized optomechanics of a single cavity with a movable end mirror:
// drift and diffusion of the fluctuation quadratures (Q, P, x, y).

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace optoact {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double boltzmann = 1.380649e-23;    // J / K
inline constexpr double speed_of_light = 299792458;  // m / s
}  // namespace constants

enum class DetuningMode { explicit_value, self_consistent };

/// Form of the Brownian noise strength on the mechanical momentum.
enum class DiffusionForm {
  quantum,           ///< gamma_m (2 nbar + 1), valid at all temperatures
  high_temperature,  ///< 2 gamma_m k_B T / (hbar omega_m)
};

/// Physical constants of one cavity/mirror unit, SI units, angular
/// frequencies in rad/s.
struct OptomechParams {
  double mass = 0;             // kg
  double mech_frequency = 0;   // omega_m
  double mech_damping = 0;     // gamma_m
  double cavity_decay = 0;     // kappa
  double cavity_length = 0;    // m
  double pump_power = 0;       // W
  double wavelength = 0;       // m
  DetuningMode detuning_mode = DetuningMode::explicit_value;
  double detuning = 0;         // Delta, used in explicit mode
  double bare_detuning = 0;    // delta = omega_C - omega_L, used in self-consistent mode
  double bath_temperature = 0;  // K
  DiffusionForm diffusion_form = DiffusionForm::quantum;
  /// Linearized coupling rate g|c_s| in rad/s. When set, the fluctuation
  /// coupling in the drift matrix is rescaled to this value; the mean field
  /// still uses the bare coupling.
  std::optional<double> effective_coupling;

  /// Reference device: m = 145 ng, omega_m = 2pi 947 kHz, L = 25 mm,
  /// P = 11 mW, lambda = 1064 nm, kappa = 2pi 215 kHz, gamma_m = 2pi 140 Hz,
  /// Delta = omega_m, T = 0.4 K, no effective-coupling override.
  static OptomechParams reference_device();

  /// Throws ValidationError naming the first offending field.
  void validate() const;

  /// Human-readable dump of every field in SI units.
  std::string describe() const;
};

/// Real 4x4 drift (one unit) or 8x8 (composed pair), rad/s.
struct DriftMatrix {
  Eigen::MatrixXd entries;
};

/// Real diagonal positive-semidefinite noise matrix, rad/s.
struct DiffusionMatrix {
  Eigen::MatrixXd entries;
};

struct SteadyField {
  std::complex<double> amplitude;  // c_s
  double detuning = 0;             // effective Delta
};

double laser_frequency(const OptomechParams& p);
/// chi = omega_C / L.
double radiation_pressure_coupling(const OptomechParams& p);
/// Bare single-photon coupling g = chi sqrt(hbar / (2 m omega_m)).
double single_photon_coupling(const OptomechParams& p);
/// Pump rate E = sqrt(2 kappa P / (hbar omega_L)).
double drive_amplitude(const OptomechParams& p);

/// Mean intracavity amplitude c_s = E / (kappa + i Delta). In
/// self-consistent mode, solves Delta = delta - hbar chi^2 |c_s|^2 / (m omega_m^2)
/// jointly and returns the stable root with the smallest |c_s|.
SteadyField steady_field(const OptomechParams& p);

/// Coupling g entering the drift matrix for the given mean field.
double fluctuation_coupling(const OptomechParams& p, const SteadyField& field);

DriftMatrix drift_matrix(const OptomechParams& p);
DriftMatrix drift_matrix(const OptomechParams& p, const SteadyField& field);
DiffusionMatrix diffusion_matrix(const OptomechParams& p);

/// Bose occupation 1 / (exp(hbar omega / k_B T) - 1); zero at T = 0.
double thermal_occupation(double temperature, double frequency);

/// True iff every eigenvalue of K has negative real part.
bool stability(const DriftMatrix& k);

struct UnitDynamics {
  DriftMatrix drift;
  DiffusionMatrix diffusion;
};

/// Global positions of unit u's local (Q, P, x, y) quadratures in the pair
/// ordering (Q1, P1, Q2, P2, x1, y1, x2, y2).
std::vector<int> pair_quadrature_indices(int unit);

/// Block-diagonal 8x8 dynamics of two non-interacting units, permuted to
/// mirrors-first ordering.
UnitDynamics compose_pair(const UnitDynamics& a, const UnitDynamics& b);

UnitDynamics unit_dynamics(const OptomechParams& p);

}  // namespace optoact
