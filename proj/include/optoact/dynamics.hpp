#pragma once

// Covariance dynamics under linear drift with delta-correlated noise:
//   dV/dt = K V + V K^T + D
// integrated with an embedded Dormand-Prince 5(4) pair.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "optoact/errors.hpp"
#include "optoact/gaussian.hpp"

namespace optoact {

template <typename Scalar = double>
struct IntegratorConfig {
  Scalar t_end = 0;
  Scalar dt_max = 0;
  Scalar rel_tol = Scalar(1e-8);
  Scalar abs_tol = Scalar(1e-10);
  /// Record every n-th accepted step (the first and last states always).
  int record_stride = 1;
  /// When false, take fixed steps of dt_max without error control.
  bool adaptive = true;
  bool keep_states = true;
  std::size_t max_steps = 50'000'000;

  void validate() const {
    if (!(t_end >= Scalar(0)) || !std::isfinite(static_cast<double>(t_end))) {
      throw ValidationError("integrator: t_end must be finite and >= 0");
    }
    if (!(dt_max > Scalar(0))) throw ValidationError("integrator: dt_max must be > 0");
    auto tol_ok = [](Scalar t) { return t > Scalar(0) && t <= Scalar(1e-2); };
    if (!tol_ok(rel_tol) || !tol_ok(abs_tol)) throw ValidationError("integrator: tolerances must lie in (0, 1e-2]");
    if (record_stride < 1) throw ValidationError("integrator: record_stride must be >= 1");
  }
};

/// Named scalar evaluated on every recorded state.
template <typename Scalar = double>
struct Measure {
  std::string name;
  std::function<Scalar(const CovarianceMatrix<Scalar>&)> fn;
};

template <typename Scalar = double>
using StopCondition = std::function<bool(Scalar, const Mat<Scalar>&)>;

template <typename Scalar = double>
struct Trajectory {
  std::vector<Scalar> times;
  /// Empty when the integrator ran with keep_states = false.
  std::vector<CovarianceMatrix<Scalar>> states;
  std::vector<std::string> measure_names;
  /// measure_values[m][k] is measure m at times[k].
  std::vector<std::vector<Scalar>> measure_values;
  bool stopped_early = false;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  const std::vector<Scalar>* column(std::string_view name) const {
    for (std::size_t i = 0; i < measure_names.size(); ++i) {
      if (measure_names[i] == name) return &measure_values[i];
    }
    return nullptr;
  }
};

namespace detail {

template <typename Scalar>
struct LyapunovRhs {
  const Mat<Scalar>& k;
  const Mat<Scalar>& d;

  Mat<Scalar> operator()(const Mat<Scalar>& v) const {
    const Mat<Scalar> kv = k * v;
    return kv + kv.transpose() + d;
  }
};

// Dormand-Prince 5(4) tableau.
template <typename Scalar>
struct DormandPrince {
  static constexpr Scalar a21 = Scalar(1) / 5;
  static constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
  static constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
  static constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187, a53 = Scalar(64448) / 6561,
                          a54 = Scalar(-212) / 729;
  static constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33, a63 = Scalar(46732) / 5247,
                          a64 = Scalar(49) / 176, a65 = Scalar(-5103) / 18656;
  static constexpr Scalar b1 = Scalar(35) / 384, b3 = Scalar(500) / 1113, b4 = Scalar(125) / 192,
                          b5 = Scalar(-2187) / 6784, b6 = Scalar(11) / 84;
  // b - b_hat (fifth minus fourth order weights)
  static constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695, e4 = Scalar(71) / 1920,
                          e5 = Scalar(-17253) / 339200, e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;
};

}  // namespace detail

/// Integrate the covariance matrix from v0 over [0, cfg.t_end].
///
/// Each accepted step is symmetrized. `measures` are evaluated on every
/// recorded state; `stop`, when set, is checked after each accepted step and
/// ends the run (recording that state) once it returns true.
template <typename Scalar>
Trajectory<Scalar> evolve(const CovarianceMatrix<Scalar>& v0, const Mat<Scalar>& k, const Mat<Scalar>& d,
                          const IntegratorConfig<Scalar>& cfg, std::span<const Measure<Scalar>> measures = {},
                          const StopCondition<Scalar>& stop = {}) {
  cfg.validate();
  const Eigen::Index n = v0.dim();
  if (k.rows() != n || k.cols() != n || d.rows() != n || d.cols() != n) {
    throw ValidationError("evolve: drift/diffusion dimensions do not match the state");
  }
  require_physical(v0, "evolve initial state");

  using DP = detail::DormandPrince<Scalar>;
  const detail::LyapunovRhs<Scalar> rhs{k, d};

  Trajectory<Scalar> traj;
  for (const auto& m : measures) traj.measure_names.push_back(m.name);
  traj.measure_values.resize(measures.size());

  auto record = [&](Scalar t, const Mat<Scalar>& v) {
    traj.times.push_back(t);
    if (cfg.keep_states || !measures.empty()) {
      CovarianceMatrix<Scalar> cm(v);
      for (std::size_t i = 0; i < measures.size(); ++i) traj.measure_values[i].push_back(measures[i].fn(cm));
      if (cfg.keep_states) traj.states.push_back(std::move(cm));
    }
  };

  Mat<Scalar> v = v0.matrix();
  Scalar t = 0;
  record(t, v);
  if (cfg.t_end == Scalar(0)) return traj;
  if (stop && stop(t, v)) {
    traj.stopped_early = true;
    return traj;
  }

  Mat<Scalar> k1 = rhs(v);
  Scalar h = cfg.dt_max;
  if (cfg.adaptive) {
    // Initial guess from the ratio of state and derivative scales.
    const Scalar f_norm = k1.norm();
    if (f_norm > Scalar(0)) h = std::min(h, Scalar(1e-3) * std::max(v.norm(), Scalar(1)) / f_norm);
  }

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  std::size_t since_record = 0;
  while (t < cfg.t_end) {
    bool last = false;
    // A remainder below 1e-8 h is folded into this step.
    if (t + h >= cfg.t_end || cfg.t_end - (t + h) < Scalar(1e-8) * h) {
      h = cfg.t_end - t;
      last = true;
    }
    if (h <= Scalar(16) * eps * std::max(t, cfg.t_end)) {
      std::ostringstream os;
      os << "integrator step size underflow at t=" << static_cast<double>(t)
         << "; tighten dt_max or shorten t_end";
      throw StiffnessError(os.str());
    }
    if (traj.accepted_steps + traj.rejected_steps >= cfg.max_steps) {
      std::ostringstream os;
      os << "integrator exceeded " << cfg.max_steps << " steps at t=" << static_cast<double>(t)
         << " of " << static_cast<double>(cfg.t_end) << "; the problem is stiff for this window";
      throw StiffnessError(os.str());
    }

    const Mat<Scalar> k2 = rhs(v + h * (DP::a21 * k1));
    const Mat<Scalar> k3 = rhs(v + h * (DP::a31 * k1 + DP::a32 * k2));
    const Mat<Scalar> k4 = rhs(v + h * (DP::a41 * k1 + DP::a42 * k2 + DP::a43 * k3));
    const Mat<Scalar> k5 = rhs(v + h * (DP::a51 * k1 + DP::a52 * k2 + DP::a53 * k3 + DP::a54 * k4));
    const Mat<Scalar> k6 = rhs(v + h * (DP::a61 * k1 + DP::a62 * k2 + DP::a63 * k3 + DP::a64 * k4 + DP::a65 * k5));
    Mat<Scalar> v_new = v + h * (DP::b1 * k1 + DP::b3 * k3 + DP::b4 * k4 + DP::b5 * k5 + DP::b6 * k6);
    v_new = ((v_new + v_new.transpose()) / Scalar(2)).eval();
    Mat<Scalar> k7 = rhs(v_new);

    if (cfg.adaptive) {
      const Mat<Scalar> err = h * (DP::e1 * k1 + DP::e3 * k3 + DP::e4 * k4 + DP::e5 * k5 + DP::e6 * k6 + DP::e7 * k7);
      const Mat<Scalar> scale =
          (cfg.abs_tol + cfg.rel_tol * v.cwiseAbs().cwiseMax(v_new.cwiseAbs()).array()).matrix();
      const Scalar err_norm = std::sqrt((err.array() / scale.array()).square().mean());
      if (!std::isfinite(static_cast<double>(err_norm))) throw NumericalError("integrator produced non-finite state");
      const Scalar factor =
          err_norm == Scalar(0)
              ? Scalar(5)
              : std::clamp(Scalar(0.9) * std::pow(err_norm, Scalar(-0.2)), Scalar(0.2), Scalar(5));
      if (err_norm > Scalar(1)) {
        ++traj.rejected_steps;
        h *= std::min(factor, Scalar(0.9));
        continue;
      }
      t = last ? cfg.t_end : t + h;
      h = std::min(cfg.dt_max, h * factor);
    } else {
      t = last ? cfg.t_end : t + h;
      h = cfg.dt_max;
    }
    v = std::move(v_new);
    k1 = std::move(k7);
    ++traj.accepted_steps;
    ++since_record;

    const bool stopping = stop && stop(t, v);
    if (since_record >= static_cast<std::size_t>(cfg.record_stride) || t >= cfg.t_end || stopping) {
      record(t, v);
      since_record = 0;
    }
    if (stopping) {
      traj.stopped_early = true;
      break;
    }
  }
  return traj;
}

/// Stop once ||V - V_ss||_F <= rel * ||V_ss||_F.
template <typename Scalar>
StopCondition<Scalar> steady_state_reached(const CovarianceMatrix<Scalar>& v_ss, Scalar rel = Scalar(1e-4)) {
  const Mat<Scalar> target = v_ss.matrix();
  const Scalar threshold = rel * target.norm();
  return [target, threshold](Scalar, const Mat<Scalar>& v) { return (v - target).norm() <= threshold; };
}

template <typename Scalar = double>
struct WindowMaximum {
  Scalar value = 0;
  Scalar t_star = 0;
};

namespace detail {

template <typename Scalar>
WindowMaximum<Scalar> argmax_earliest(const std::vector<Scalar>& times, const std::vector<Scalar>& values) {
  if (times.empty() || values.size() != times.size()) throw ValidationError("max over window: empty trajectory");
  WindowMaximum<Scalar> best{values[0], times[0]};
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > best.value) best = {values[i], times[i]};
  }
  return best;
}

}  // namespace detail

/// Maximum of a recorded measure over the trajectory; ties go to the
/// earliest time.
template <typename Scalar>
WindowMaximum<Scalar> max_measure_over_window(const Trajectory<Scalar>& traj, std::string_view measure) {
  if (traj.empty()) throw ValidationError("max over window: empty trajectory");
  const auto* col = traj.column(measure);
  if (col == nullptr) throw ValidationError("max over window: trajectory has no measure '" + std::string(measure) + "'");
  return detail::argmax_earliest(traj.times, *col);
}

/// Maximum log-negativity across `partition`, computed from stored states.
template <typename Scalar>
WindowMaximum<Scalar> max_measure_over_window(const Trajectory<Scalar>& traj, const std::vector<int>& partition) {
  if (traj.empty()) throw ValidationError("max over window: empty trajectory");
  if (traj.states.size() != traj.times.size()) {
    throw ValidationError("max over window: trajectory was recorded without states");
  }
  std::vector<Scalar> values;
  values.reserve(traj.states.size());
  for (const auto& s : traj.states) values.push_back(log_negativity(s, partition));
  return detail::argmax_earliest(traj.times, values);
}

}  // namespace optoact
