#include "optoact/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "optoact/discord.hpp"
#include "optoact/errors.hpp"
#include "optoact/lyapunov.hpp"

namespace optoact {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

/// Runs fn(i) for i in [0, n) on a small pool; results are written by index
/// so output order never depends on scheduling. The first exception is
/// rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned threads = std::min<std::size_t>(std::max(1u, sweep_threads()), std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

bool known_measure(const std::string& name) {
  return name == kMeasurePair1 || name == kMeasurePair2 || name == kMeasureSplit || name == kMeasureDiscord ||
         name == kMeasureNuMin;
}

Measure<double> make_measure(const std::string& name) {
  if (name == kMeasurePair1) {
    return {name, [](const CM& v) { return log_negativity(reduce(v, {0, 2}), {1}); }};
  }
  if (name == kMeasurePair2) {
    return {name, [](const CM& v) { return log_negativity(reduce(v, {1, 3}), {1}); }};
  }
  if (name == kMeasureSplit) {
    return {name, [](const CM& v) { return log_negativity(v, {2, 3}); }};
  }
  if (name == kMeasureDiscord) {
    return {name, [](const CM& v) { return gaussian_discord(reduce(v, {0, 1}), 1); }};
  }
  if (name == kMeasureNuMin) {
    return {name, [](const CM& v) { return symplectic_eigenvalues(v).min(); }};
  }
  throw ValidationError("unknown measure '" + name + "'");
}

/// Single-unit run used by the sweeps: mirror/field state `v0` under `p`.
struct UnitRun {
  Trajectory<double> trajectory;
};

UnitRun run_unit(const OptomechParams& p, const CM& v0, const ScenarioConfig& cfg, double cap) {
  const auto dyn = unit_dynamics(p);
  IntegratorConfig<double> icfg = cfg.integrator;
  icfg.t_end = cap;
  icfg.keep_states = false;
  const std::vector<Measure<double>> measures{
      {"E", [](const CM& v) { return log_negativity(v, {1}); }}};
  StopCondition<double> stop;
  if (cfg.window == WindowRule::steady_state && stability(dyn.drift)) {
    stop = steady_state_reached(steady_state<double>(dyn.drift.entries, dyn.diffusion.entries));
  }
  return {evolve<double>(v0, dyn.drift.entries, dyn.diffusion.entries, icfg, measures, stop)};
}

}  // namespace

unsigned sweep_threads() {
  if (const char* env = std::getenv("OPTOACT_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

IntegratorConfig<double> ScenarioConfig::default_integrator() {
  IntegratorConfig<double> cfg;
  cfg.t_end = 0;
  // A twentieth of the reference mechanical period.
  cfg.dt_max = 1.0 / (20 * 947e3);
  cfg.rel_tol = 1e-8;
  cfg.abs_tol = 1e-10;
  return cfg;
}

double ScenarioConfig::window_cap() const {
  if (integrator.t_end > 0) return integrator.t_end;
  return 10.0 / std::min(units[0].mech_damping, units[1].mech_damping);
}

void ScenarioConfig::validate() const {
  for (const auto& u : units) u.validate();
  IntegratorConfig<double> icfg = integrator;
  icfg.t_end = window_cap();
  icfg.validate();
  if (const auto* s = std::get_if<SqueezedOptics>(&optics); s && !(s->r >= 0)) {
    throw ValidationError("opt_init: squeezing r must be >= 0");
  }
  if (const auto* t = std::get_if<ThermalInit>(&mech); t && !(t->temperature >= 0)) {
    throw ValidationError("mech_init: temperature must be >= 0");
  }
  if (const auto* e = std::get_if<ExplicitInit>(&mech); e && e->state.modes() != 2) {
    throw ValidationError("mech_init: explicit mechanical state must have two modes");
  }
  if (const auto* d = std::get_if<SeparableDiscordedInit>(&mech)) {
    prepare_separable_discorded(d->target_occupation, d->strength);
  }
  if (demon.seed && demon.count < 1) throw ValidationError("demon: sample count must be >= 1");
  for (const auto& m : measures) {
    if (!known_measure(m)) throw ValidationError("outputs: unknown measure '" + m + "'");
  }
  for (double t : temperatures) {
    if (!(t > 0)) throw ValidationError("sweep: temperatures must be > 0");
  }
  for (double r : squeezings) {
    if (!(r >= 0)) throw ValidationError("sweep: squeezing values must be >= 0");
  }
}

CM prepare_separable_discorded(double target_occupation, double strength) {
  if (!(target_occupation >= 0) || !std::isfinite(target_occupation)) {
    throw ValidationError("prepare_separable_discorded: target occupation must be >= 0");
  }
  if (!(strength >= 0 && strength <= 1)) {
    std::ostringstream os;
    os << "prepare_separable_discorded: correlation strength " << strength
       << " is infeasible; the maximal separable strength is 1";
    throw ValidationError(os.str());
  }
  // Partially transposed spectrum: a - c = 1/2 + (1 - strength) n.
  const double a = target_occupation + 0.5;
  const double c = strength * target_occupation;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 4);
  v.diagonal().setConstant(a);
  v(0, 2) = v(2, 0) = c;
  v(1, 3) = v(3, 1) = -c;
  return CM(v);
}

CM optical_state(const OpticalInit& spec) {
  if (const auto* s = std::get_if<SqueezedOptics>(&spec)) return squeezed_vacuum(s->r, s->phase);
  return vacuum<double>(1);
}

CM assemble_initial(const CM& mech, const OpticalInit& optics) {
  if (mech.modes() != 2) throw ValidationError("assemble_initial: mechanical state must have two modes");
  require_physical(mech, "assemble_initial");
  const CM field = optical_state(optics);
  return direct_sum(mech, direct_sum(field, field));
}

CM mechanical_state(const ScenarioConfig& cfg) {
  CM mech = std::visit(
      [&](const auto& init) -> CM {
        using T = std::decay_t<decltype(init)>;
        if constexpr (std::is_same_v<T, ThermalInit>) {
          return direct_sum(thermal(thermal_occupation(init.temperature, cfg.units[0].mech_frequency)),
                            thermal(thermal_occupation(init.temperature, cfg.units[1].mech_frequency)));
        } else if constexpr (std::is_same_v<T, ExplicitInit>) {
          return init.state;
        } else {
          return prepare_separable_discorded(init.target_occupation, init.strength);
        }
      },
      cfg.mech);
  return cfg.strip_mech_correlations ? strip_correlations(mech) : mech;
}

ActivationRun run_activation(const ScenarioConfig& cfg) {
  std::optional<RotationAngles<double>> demon;
  if (cfg.demon.angles) demon = RotationAngles<double>{(*cfg.demon.angles)[0], (*cfg.demon.angles)[1]};
  return run_activation(cfg, demon);
}

ActivationRun run_activation(const ScenarioConfig& cfg, const std::optional<RotationAngles<double>>& demon) {
  cfg.validate();
  CM mech = mechanical_state(cfg);
  if (demon) mech = rotate_local(mech, *demon);
  const CM v0 = assemble_initial(mech, cfg.optics);

  const auto dyn = compose_pair(unit_dynamics(cfg.units[0]), unit_dynamics(cfg.units[1]));
  ActivationRun out;
  out.steady_state_exists = stability(dyn.drift);
  StopCondition<double> stop;
  if (out.steady_state_exists) {
    out.steady = steady_state<double>(dyn.drift.entries, dyn.diffusion.entries);
    if (cfg.window == WindowRule::steady_state) stop = steady_state_reached(*out.steady);
  } else {
    out.warnings.push_back("drift matrix is not Hurwitz: no steady state, transient computed up to the window cap");
  }

  std::vector<Measure<double>> measures;
  for (const auto& name : cfg.measures) measures.push_back(make_measure(name));

  IntegratorConfig<double> icfg = cfg.integrator;
  icfg.t_end = cfg.window_cap();
  out.trajectory = evolve<double>(v0, dyn.drift.entries, dyn.diffusion.entries, icfg, measures, stop);
  return out;
}

double SweepResult::min_e_max() const {
  if (points.empty()) throw ValidationError("sweep result is empty");
  double m = points.front().e_max;
  for (const auto& p : points) m = std::min(m, p.e_max);
  return m;
}

std::array<double, 2> demon_angles(std::uint64_t seed, std::size_t index) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
  std::mt19937_64 gen(seq);
  auto uniform_angle = [&gen] { return kTwoPi * static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  const double a = uniform_angle();
  const double b = uniform_angle();
  return {a, b};
}

SweepResult demon_sample_angles(const ScenarioConfig& cfg, const std::vector<std::array<double, 2>>& angles) {
  if (angles.empty()) throw ValidationError("demon_sample: need at least one sample");
  cfg.validate();
  ScenarioConfig run_cfg = cfg;
  run_cfg.measures = {kMeasureSplit};
  run_cfg.integrator.keep_states = false;

  SweepResult out;
  out.axis_name = "sample";
  out.measure = kMeasureSplit;
  out.config_hash = cfg.config_hash;
  out.points.resize(angles.size());
  parallel_for(angles.size(), [&](std::size_t i) {
    const auto run = run_activation(run_cfg, RotationAngles<double>{angles[i][0], angles[i][1]});
    const auto best = max_measure_over_window(run.trajectory, kMeasureSplit);
    out.points[i] = SweepPoint{static_cast<double>(i), best.value, best.t_star, {angles[i][0], angles[i][1]}, {}, {}};
  });
  return out;
}

SweepResult demon_sample(const ScenarioConfig& cfg, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("demon_sample: n must be >= 1");
  std::vector<std::array<double, 2>> angles(n);
  for (std::size_t i = 0; i < n; ++i) angles[i] = demon_angles(seed, i);
  SweepResult out = demon_sample_angles(cfg, angles);
  out.seed = seed;
  return out;
}

SweepResult temperature_sweep(const ScenarioConfig& cfg, const std::vector<double>& temperatures) {
  if (temperatures.empty()) throw ValidationError("temperature_sweep: temperature list is empty");
  for (double t : temperatures) {
    if (!(t > 0)) throw ValidationError("temperature_sweep: temperatures must be > 0");
  }
  cfg.validate();
  SweepResult out;
  out.axis_name = "T_K";
  out.measure = "E_max";
  out.config_hash = cfg.config_hash;
  out.points.resize(temperatures.size());
  parallel_for(temperatures.size(), [&](std::size_t i) {
    OptomechParams p = cfg.units[0];
    p.bath_temperature = temperatures[i];
    const CM v0 = direct_sum(thermal(thermal_occupation(temperatures[i], p.mech_frequency)), vacuum<double>(1));
    const double cap = cfg.integrator.t_end > 0 ? cfg.integrator.t_end : 10.0 / p.mech_damping;
    const auto run = run_unit(p, v0, cfg, cap);
    const auto best = max_measure_over_window(run.trajectory, "E");
    out.points[i] = SweepPoint{temperatures[i], best.value, best.t_star, {}, {}, {}};
  });
  return out;
}

SweepResult squeezing_sweep(const ScenarioConfig& cfg, const std::vector<double>& squeezings) {
  if (squeezings.empty()) throw ValidationError("squeezing_sweep: squeezing list is empty");
  for (double r : squeezings) {
    if (!(r >= 0)) throw ValidationError("squeezing_sweep: squeezing values must be >= 0");
  }
  cfg.validate();
  const double phase = std::holds_alternative<SqueezedOptics>(cfg.optics) ? std::get<SqueezedOptics>(cfg.optics).phase : 0.0;
  SweepResult out;
  out.axis_name = "r";
  out.measure = "E_max";
  out.config_hash = cfg.config_hash;
  out.points.resize(squeezings.size());
  parallel_for(squeezings.size(), [&](std::size_t i) {
    const OptomechParams& p = cfg.units[0];
    const CM mirror = thermal(thermal_occupation(p.bath_temperature, p.mech_frequency));
    const CM v0 = direct_sum(mirror, squeezed_vacuum(squeezings[i], phase));
    const double cap = cfg.integrator.t_end > 0 ? cfg.integrator.t_end : 10.0 / p.mech_damping;
    auto run = run_unit(p, v0, cfg, cap);
    const auto best = max_measure_over_window(run.trajectory, "E");
    SweepPoint pt{squeezings[i], best.value, best.t_star, {}, std::move(run.trajectory.times), {}};
    pt.series = std::move(run.trajectory.measure_values[0]);
    out.points[i] = std::move(pt);
  });
  return out;
}

}  // namespace optoact
