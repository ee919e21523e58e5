#include <doctest.h>

#include <cmath>
#include <random>

#include "optoact/dynamics.hpp"
#include "optoact/lyapunov.hpp"
#include "optoact/optomech.hpp"
#include "oracles.hpp"

using namespace optoact;
using Eigen::MatrixXd;

namespace {

double rel_fro(const MatrixXd& a, const MatrixXd& b) { return (a - b).norm() / b.norm(); }

/// Damped oscillator pair with a weak coupling, comfortably stable.
MatrixXd test_drift() {
  MatrixXd k(4, 4);
  // clang-format off
  k <<  0,    1.0,  0,    0,
       -1.0, -0.1,  0.2,  0,
        0,    0,   -0.5,  0.8,
        0.2,  0,   -0.8, -0.5;
  // clang-format on
  return k;
}

MatrixXd test_diffusion() { return Eigen::Vector4d(0, 0.3, 0.5, 0.5).asDiagonal(); }

IntegratorConfig<double> config(double t_end, double dt_max) {
  IntegratorConfig<double> c;
  c.t_end = t_end;
  c.dt_max = dt_max;
  c.rel_tol = 1e-10;
  c.abs_tol = 1e-12;
  return c;
}

std::pair<MatrixXd, MatrixXd> reference_pair() {
  const auto u = unit_dynamics(OptomechParams::reference_device());
  const auto pair = compose_pair(u, u);
  return {pair.drift.entries, pair.diffusion.entries};
}

}  // namespace

TEST_CASE("steady state matches the Kronecker oracle") {
  const MatrixXd k = test_drift(), d = test_diffusion();
  const auto v = steady_state<double>(k, d);
  CHECK(rel_fro(v.matrix(), oracle::lyapunov_kron(k, d)) < 1e-12);
  CHECK(detail::lyapunov_residual<double>(k, v.matrix(), d).norm() < 1e-12);

  const auto [k8, d8] = reference_pair();
  const auto v8 = steady_state<double>(k8, d8);
  CHECK(rel_fro(v8.matrix(), oracle::lyapunov_kron(k8, d8)) < 1e-9);
  CHECK(check_physical(v8));
}

TEST_CASE("steady state requires a Hurwitz drift") {
  MatrixXd k = MatrixXd::Zero(2, 2);
  k << 0, 1, -1, 0;
  CHECK_FALSE(is_hurwitz<double>(k));
  CHECK_THROWS_AS(steady_state<double>(k, MatrixXd::Identity(2, 2)), NoSteadyStateError);
  CHECK_THROWS_AS(steady_state<double>(test_drift(), MatrixXd::Identity(2, 2)), ValidationError);
  MatrixXd asym = test_diffusion();
  asym(0, 1) = 1;
  CHECK_THROWS_AS(steady_state<double>(test_drift(), asym), ValidationError);
}

TEST_CASE("adaptive evolution matches the exact propagator") {
  const MatrixXd k = test_drift(), d = test_diffusion();
  const auto v0 = direct_sum(thermal(2.0), squeezed_vacuum(0.4, 0.3));
  const auto traj = evolve(v0, k, d, config(20.0, 0.5));
  REQUIRE(traj.states.size() == traj.times.size());
  CHECK(traj.times.back() == 20.0);
  for (std::size_t i = 0; i < traj.size(); i += 7) {
    const MatrixXd ref = oracle::propagate(k, d, v0.matrix(), traj.times[i]);
    CHECK(rel_fro(traj.states[i].matrix(), ref) < 1e-8);
  }
}

TEST_CASE("evolution also works for an unstable drift") {
  MatrixXd k = test_drift();
  k(2, 2) = k(3, 3) = 0.3;
  REQUIRE_FALSE(is_hurwitz<double>(k));
  const auto v0 = vacuum<double>(2);
  const auto traj = evolve(v0, k, test_diffusion(), config(5.0, 0.25));
  CHECK(rel_fro(traj.states.back().matrix(), oracle::propagate(k, test_diffusion(), v0.matrix(), 5.0)) < 1e-8);
}

TEST_CASE("fixed-step integrator converges at fifth order") {
  const MatrixXd k = test_drift(), d = test_diffusion();
  const auto v0 = direct_sum(thermal(1.0), vacuum<double>(1));
  const MatrixXd ref = oracle::propagate(k, d, v0.matrix(), 4.0);
  std::vector<double> errs;
  for (double h : {0.4, 0.2, 0.1}) {
    auto c = config(4.0, h);
    c.adaptive = false;
    errs.push_back((evolve(v0, k, d, c).states.back().matrix() - ref).norm());
  }
  const double order1 = std::log2(errs[0] / errs[1]);
  const double order2 = std::log2(errs[1] / errs[2]);
  CHECK(order1 > 4.5);
  CHECK(order2 > 4.5);
}

TEST_CASE("evolution preserves symmetry and physicality") {
  const auto [k, d] = reference_pair();
  const auto v0 = direct_sum(direct_sum(thermal(12.0), thermal(12.0)), vacuum<double>(2));
  auto c = config(2e-5, 1.0 / (20 * 947e3));
  c.rel_tol = 1e-8;
  const auto traj = evolve(v0, k, d, c);
  for (const auto& s : traj.states) {
    CHECK(s.matrix() == s.matrix().transpose());
    CHECK(symplectic_eigenvalues(s).min() >= 0.5 - 1e-6);
  }
}

TEST_CASE("long evolution reaches the algebraic steady state") {
  const auto p = OptomechParams::reference_device();
  const auto [k, d] = reference_pair();
  const auto ss = steady_state<double>(k, d);
  const auto n = thermal_occupation(p.bath_temperature, p.mech_frequency);
  const auto v0 = direct_sum(direct_sum(thermal(n), thermal(n)), vacuum<double>(2));
  auto c = config(10.0 / p.mech_damping, 1.0 / (20 * 947e3));
  c.rel_tol = 1e-8;
  c.abs_tol = 1e-10;
  c.keep_states = false;
  const std::vector<Measure<double>> nu{{"nu_min", [](const CovarianceMatrix<double>& v) {
                                           return symplectic_eigenvalues(v).min();
                                         }}};
  c.record_stride = 50;
  c.keep_states = true;
  const auto traj = evolve<double>(v0, k, d, c, nu);
  CHECK(rel_fro(traj.states.back().matrix(), ss.matrix()) <= 1e-5);
  for (double x : *traj.column("nu_min")) CHECK(x >= 0.5 - 1e-6);
}

TEST_CASE("distant initial states converge to the same steady state") {
  const MatrixXd k = test_drift(), d = test_diffusion();
  const auto a = evolve(direct_sum(thermal(50.0), vacuum<double>(1)), k, d, config(400.0, 1.0));
  const auto b = evolve(direct_sum(squeezed_vacuum(1.5), thermal(5.0)), k, d, config(400.0, 1.0));
  CHECK((a.states.back().matrix() - b.states.back().matrix()).norm() < 1e-6);
}

TEST_CASE("stop condition ends the run at the recorded state") {
  const MatrixXd k = test_drift(), d = test_diffusion();
  const auto ss = steady_state<double>(k, d);
  auto c = config(1e4, 0.5);
  const auto traj = evolve<double>(direct_sum(thermal(3.0), vacuum<double>(1)), k, d, c, {},
                                   steady_state_reached(ss));
  CHECK(traj.stopped_early);
  CHECK(traj.times.back() < 1e4);
  CHECK((traj.states.back().matrix() - ss.matrix()).norm() <= 1e-4 * ss.matrix().norm());
  CHECK((traj.states[traj.size() - 2].matrix() - ss.matrix()).norm() > 1e-4 * ss.matrix().norm());
}

TEST_CASE("window maximum takes the earliest time on ties") {
  Trajectory<double> t;
  t.times = {0, 1, 2, 3};
  t.measure_names = {"E"};
  t.measure_values = {{0, 0.5, 0.5, 0.2}};
  const auto m = max_measure_over_window(t, "E");
  CHECK(m.value == 0.5);
  CHECK(m.t_star == 1);
  CHECK_THROWS_AS(max_measure_over_window(t, "missing"), ValidationError);
  CHECK_THROWS_AS(max_measure_over_window(t, std::vector<int>{1}), ValidationError);

  Trajectory<double> zero;
  zero.times = {0, 1};
  zero.measure_names = {"E"};
  zero.measure_values = {{0, 0}};
  CHECK(max_measure_over_window(zero, "E").t_star == 0);
}

TEST_CASE("record stride and keep_states") {
  const MatrixXd k = test_drift(), d = test_diffusion();
  auto c = config(10.0, 0.1);
  c.adaptive = false;
  c.record_stride = 10;
  const auto traj = evolve(vacuum<double>(2), k, d, c);
  CHECK(traj.size() == 11);
  c.keep_states = false;
  const std::vector<Measure<double>> m{{"q", [](const CovarianceMatrix<double>& v) { return v(0, 0); }}};
  const auto light = evolve<double>(vacuum<double>(2), k, d, c, m);
  CHECK(light.states.empty());
  CHECK(light.column("q")->size() == light.size());
}

TEST_CASE("integrator configuration is validated") {
  const MatrixXd k = test_drift(), d = test_diffusion();
  auto c = config(1.0, 0.0);
  CHECK_THROWS_AS(evolve(vacuum<double>(2), k, d, c), ValidationError);
  c = config(-1.0, 0.1);
  CHECK_THROWS_AS(evolve(vacuum<double>(2), k, d, c), ValidationError);
  c = config(1.0, 0.1);
  c.rel_tol = 0.5;
  CHECK_THROWS_AS(evolve(vacuum<double>(2), k, d, c), ValidationError);
  CHECK_THROWS_AS(evolve(vacuum<double>(1), k, d, config(1.0, 0.1)), ValidationError);
  CHECK_THROWS_AS(evolve(CovarianceMatrix<double>(MatrixXd::Identity(4, 4) * 0.3), k, d, config(1.0, 0.1)),
                  ValidationError);
  c = config(1.0, 0.1);
  c.max_steps = 3;
  CHECK_THROWS_AS(evolve(vacuum<double>(2), k, d, c), StiffnessError);
}

TEST_CASE("composed pair evolves as two independent units") {
  const auto p = OptomechParams::reference_device();
  const auto u = unit_dynamics(p);
  const auto pair = compose_pair(u, u);
  const auto unit0 = direct_sum(thermal(12.0), vacuum<double>(1));
  const auto unit1 = direct_sum(thermal(30.0), squeezed_vacuum(0.3));
  // Pair ordering (M1, M2, F1, F2).
  const auto v0 = direct_sum(direct_sum(thermal(12.0), thermal(30.0)), direct_sum(vacuum<double>(1), squeezed_vacuum(0.3)));
  const double t = 3e-6;
  const MatrixXd full = oracle::propagate(pair.drift.entries, pair.diffusion.entries, v0.matrix(), t);
  const MatrixXd a = oracle::propagate(u.drift.entries, u.diffusion.entries, unit0.matrix(), t);
  const MatrixXd b = oracle::propagate(u.drift.entries, u.diffusion.entries, unit1.matrix(), t);
  auto c = config(t, 1.0 / (20 * 947e3));
  c.rel_tol = 1e-10;
  const auto traj = evolve(v0, pair.drift.entries, pair.diffusion.entries, c);
  const MatrixXd& v = traj.states.back().matrix();
  CHECK(rel_fro(v, full) < 1e-8);
  const std::vector<int> i0 = pair_quadrature_indices(0), i1 = pair_quadrature_indices(1);
  for (int r = 0; r < 4; ++r) {
    for (int s = 0; s < 4; ++s) {
      CHECK(std::abs(v(i0[r], i0[s]) - a(r, s)) < 1e-7 * a.norm());
      CHECK(std::abs(v(i1[r], i1[s]) - b(r, s)) < 1e-7 * b.norm());
      CHECK(std::abs(v(i0[r], i1[s])) < 1e-9 * a.norm());
    }
  }
}

TEST_CASE("flow without diffusion is linear in the initial state") {
  const MatrixXd k = test_drift(), zero = MatrixXd::Zero(4, 4);
  auto c = config(3.0, 0.05);
  c.adaptive = false;
  const auto a = direct_sum(thermal(2.0), squeezed_vacuum(0.3));
  const auto b = direct_sum(squeezed_vacuum(0.7, 1.0), thermal(0.5));
  const CovarianceMatrix<double> mix(0.3 * a.matrix() + 0.7 * b.matrix());
  const MatrixXd lhs = evolve(mix, k, zero, c).states.back().matrix();
  const MatrixXd rhs =
      0.3 * evolve(a, k, zero, c).states.back().matrix() + 0.7 * evolve(b, k, zero, c).states.back().matrix();
  CHECK((lhs - rhs).norm() <= 1e-9 * rhs.norm());
}
