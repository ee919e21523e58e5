#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "optoact/discord.hpp"
#include "oracles.hpp"

using namespace optoact;
using Eigen::MatrixXd;

TEST_CASE("entropy function") {
  CHECK(entropy_function(1.0) == 0.0);
  CHECK(entropy_function(0.999999) == 0.0);
  CHECK(entropy_function(3.0) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-14));
  // Thermal state entropy (n+1) ln(n+1) - n ln n at x = 2n + 1.
  const double n = 4.0;
  CHECK(entropy_function(2 * n + 1) == doctest::Approx((n + 1) * std::log(n + 1) - n * std::log(n)).epsilon(1e-13));
}

TEST_CASE("discord of two-mode squeezed vacuum") {
  for (double r : {0.25, 0.5, 1.0}) {
    const auto v = two_mode_squeezed_vacuum(r);
    const double d = gaussian_discord(v);
    CHECK(std::abs(d - oracle::f(std::cosh(2 * r))) < 1e-4);
    CHECK(std::abs(d - oracle::discord_brute_force(v.matrix())) < 1e-4);
  }
}

TEST_CASE("discord vanishes on product states") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = CovarianceMatrix<double>(oracle::random_cm(rng, 1));
    const auto b = CovarianceMatrix<double>(oracle::random_cm(rng, 1));
    CHECK(std::abs(gaussian_discord(direct_sum(a, b))) <= 1e-9);
    CHECK(std::abs(gaussian_discord(direct_sum(a, b), 0)) <= 1e-9);
  }
}

TEST_CASE("numeric infimum agrees with the closed form on random states") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const MatrixXd v = oracle::random_cm(rng, 2, 3.0, 1.0);
    const double b = (2 * v.block<2, 2>(2, 2)).determinant();
    if (b < 1 + 1e-6) continue;
    const double d = gaussian_discord(CovarianceMatrix<double>(v));
    const double ref = oracle::discord_closed_form(v);
    CHECK(std::abs(d - ref) < 1e-6 * std::max(1.0, ref));
  }
}

TEST_CASE("numeric infimum agrees with brute force on random states") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd v = oracle::random_cm(rng, 2, 2.0, 0.8);
    for (int measured : {0, 1}) {
      const double d = gaussian_discord(CovarianceMatrix<double>(v), measured);
      CHECK(d <= oracle::discord_brute_force(v, measured) + 1e-9);
      CHECK(std::abs(d - oracle::discord_brute_force(v, measured)) < 1e-5);
    }
  }
}

TEST_CASE("discord is invariant under local rotations") {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = CovarianceMatrix<double>(oracle::random_cm(rng, 2));
    const auto w = rotate_local(v, RotationAngles<double>{angle(rng), angle(rng)});
    CHECK(std::abs(gaussian_discord(v) - gaussian_discord(w)) < 1e-8);
  }
}

TEST_CASE("discord is nonnegative and the optimum lies in the box or at the homodyne limit") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = CovarianceMatrix<double>(oracle::random_cm(rng, 2, 4.0, 1.2));
    const auto res = gaussian_discord_details(v);
    CHECK(res.value >= 0.0);
    CHECK(res.s_opt >= 0.0);
    CHECK((res.s_opt <= 5.0 || std::isinf(res.s_opt)));
    CHECK(res.phi_opt >= 0.0);
    CHECK(res.phi_opt < std::numbers::pi);
  }
}

TEST_CASE("discord input validation") {
  CHECK_THROWS_AS(gaussian_discord(vacuum<double>(3)), ValidationError);
  CHECK_THROWS_AS(gaussian_discord(vacuum<double>(2), 2), ValidationError);
  CHECK_THROWS_AS(gaussian_discord(CovarianceMatrix<double>(MatrixXd::Identity(4, 4) * 0.3)), ValidationError);
  DiscordOptions bad;
  bad.grid_s = 1;
  CHECK_THROWS_AS(gaussian_discord(vacuum<double>(2), 1, bad), ValidationError);
}

TEST_CASE("search that cannot converge reports a numerical error") {
  DiscordOptions opt;
  opt.max_iterations = 2;
  CHECK_THROWS_AS(gaussian_discord(two_mode_squeezed_vacuum(0.4), 1, opt), NumericalError);
}
