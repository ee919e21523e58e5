#pragma once

// Experiments on two optomechanical units whose mirrors form the register
// and whose cavity fields are the ancillae: state preparation, local
// "demon" rotations, activation runs and parameter sweeps.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "optoact/dynamics.hpp"
#include "optoact/gaussian.hpp"
#include "optoact/optomech.hpp"

namespace optoact {

using CM = CovarianceMatrix<double>;

/// Each mirror thermal at the given temperature.
struct ThermalInit {
  double temperature = 0;
};

/// Mechanical two-mode state supplied directly (e.g. read from a file).
struct ExplicitInit {
  CM state;
  std::string source;
};

/// Symmetric squeezed-thermal state on the separability boundary scale.
struct SeparableDiscordedInit {
  double target_occupation = 0;
  double strength = 1;
};

using MechanicalInit = std::variant<ThermalInit, ExplicitInit, SeparableDiscordedInit>;

/// Coherent pump fluctuations are vacuum fluctuations.
struct CoherentOptics {};

struct SqueezedOptics {
  double r = 0;
  double phase = 0;
};

using OpticalInit = std::variant<CoherentOptics, SqueezedOptics>;

struct DemonSpec {
  /// Fixed rotation of the two mirrors, applied by run_activation.
  std::optional<std::array<double, 2>> angles;
  std::size_t count = 0;
  std::optional<std::uint64_t> seed;
};

enum class WindowRule {
  steady_state,  ///< stop at ||V - V_ss|| <= 1e-4 ||V_ss||, capped at t_end
  full,          ///< always integrate to t_end
};

inline constexpr const char* kMeasurePair1 = "E_pair1";
inline constexpr const char* kMeasurePair2 = "E_pair2";
inline constexpr const char* kMeasureSplit = "E_mirrors_vs_fields";
inline constexpr const char* kMeasureDiscord = "D_mech";
inline constexpr const char* kMeasureNuMin = "nu_min";

struct ScenarioConfig {
  std::array<OptomechParams, 2> units{OptomechParams::reference_device(), OptomechParams::reference_device()};
  MechanicalInit mech = ThermalInit{0.4};
  /// Replace the mechanical state by the product of its reductions.
  bool strip_mech_correlations = false;
  OpticalInit optics = CoherentOptics{};
  DemonSpec demon;
  /// t_end == 0 selects the default cap of 10 / gamma_m (slowest unit).
  IntegratorConfig<double> integrator = default_integrator();
  WindowRule window = WindowRule::steady_state;
  std::vector<std::string> measures{kMeasurePair1, kMeasurePair2, kMeasureSplit, kMeasureDiscord, kMeasureNuMin};
  std::vector<double> temperatures;
  std::vector<double> squeezings;
  /// Content digest of the file the config came from (empty for defaults).
  std::string config_hash;

  static IntegratorConfig<double> default_integrator();
  /// Throws ValidationError on inconsistent settings.
  void validate() const;
  /// Integration cap actually used: integrator.t_end, or 10 / min gamma_m.
  double window_cap() const;
};

/// Symmetric two-mode squeezed-thermal state with local occupation
/// `target_occupation` and correlations gamma = diag(c, -c), c = strength *
/// target_occupation. strength = 1 puts the partially transposed spectrum
/// exactly on the separability boundary 1/2; strength = 0 is a product state.
CM prepare_separable_discorded(double target_occupation, double strength);

CM optical_state(const OpticalInit& spec);

/// Four-mode state in pair ordering (M1, M2, F1, F2): mechanical block
/// `mech`, each optical block from `optics`.
CM assemble_initial(const CM& mech, const OpticalInit& optics);

/// Two-mode mechanical state described by the scenario (before any demon rotation).
CM mechanical_state(const ScenarioConfig& cfg);

struct ActivationRun {
  Trajectory<double> trajectory;
  bool steady_state_exists = false;
  std::optional<CM> steady;
  /// Non-fatal diagnostics (for example, no steady state).
  std::vector<std::string> warnings;
};

/// Rotate the mechanical register (if a demon angle is set), evolve both
/// units, record the configured measures.
ActivationRun run_activation(const ScenarioConfig& cfg);
ActivationRun run_activation(const ScenarioConfig& cfg, const std::optional<RotationAngles<double>>& demon);

struct SweepPoint {
  double axis = 0;
  double e_max = 0;
  double t_star = 0;
  std::vector<double> angles;
  /// Time series of the swept measure (filled by squeezing_sweep).
  std::vector<double> times;
  std::vector<double> series;
};

struct SweepResult {
  std::string axis_name;
  std::string measure;
  std::vector<SweepPoint> points;
  std::optional<std::uint64_t> seed;
  std::string config_hash;

  double min_e_max() const;
};

/// Angle pair for demon sample `index` derived from `seed` alone, uniform on [0, 2pi)^2.
std::array<double, 2> demon_angles(std::uint64_t seed, std::size_t index);

/// Max-window E(mirrors : fields) for each of n seeded random rotations.
SweepResult demon_sample(const ScenarioConfig& cfg, std::size_t n, std::uint64_t seed);
/// Same, for explicitly listed rotations.
SweepResult demon_sample_angles(const ScenarioConfig& cfg, const std::vector<std::array<double, 2>>& angles);

/// Thermal mirror at T, bath at T, coherent optics: max-window E(mirror : field)
/// of unit 1 for each temperature.
SweepResult temperature_sweep(const ScenarioConfig& cfg, const std::vector<double>& temperatures);

/// Thermal mirror at the bath temperature, squeezed(r) optics: E(mirror : field)
/// of unit 1 over time for each r.
SweepResult squeezing_sweep(const ScenarioConfig& cfg, const std::vector<double>& squeezings);

/// Number of worker threads for sweeps (OPTOACT_THREADS, else hardware).
unsigned sweep_threads();

}  // namespace optoact
