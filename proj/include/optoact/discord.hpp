#pragma once

// Gaussian quantum discord of two-mode states, with the infimum over
// Gaussian measurements on one mode found numerically.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "optoact/errors.hpp"
#include "optoact/gaussian.hpp"

namespace optoact {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

/// f(x) = ((x+1)/2) ln((x+1)/2) - ((x-1)/2) ln((x-1)/2), the von Neumann
/// entropy of a single-mode thermal state with symplectic eigenvalue x/2.
/// Arguments below 1 (rounding on pure states) are treated as 1.
template <typename Scalar>
Scalar entropy_function(Scalar x) {
  x = std::max(Scalar(1), x);
  const Scalar a = (x + Scalar(1)) / Scalar(2);
  const Scalar b = (x - Scalar(1)) / Scalar(2);
  Scalar out = a * std::log(a);
  if (b > Scalar(0)) out -= b * std::log(b);
  return out;
}

/// Controls for the measurement-infimum search. The seed state of the
/// measurement is a pure squeezed state with squeezing s in [0, s_max] and
/// orientation phi in [0, pi); the homodyne limit s -> inf is added in closed
/// form.
struct DiscordOptions {
  double s_max = 5.0;
  int grid_s = 26;
  int grid_phi = 24;
  int starts = 3;
  /// Pattern search stops once the step is below step_tol times the box radius.
  double step_tol = 1e-11;
  int max_iterations = 20000;
};

template <typename Scalar = double>
struct DiscordResult {
  Scalar value = 0;
  /// inf over seeds of det(epsilon), in vacuum = 1/4 units.
  Scalar inf_det_schur = 0;
  /// Infinite when the homodyne limit wins.
  Scalar s_opt = 0;
  Scalar phi_opt = 0;
  int iterations = 0;
};

namespace detail {

/// Single-mode pure squeezed state with squeezing s, rotated by phi.
template <typename Scalar>
Mat2<Scalar> measurement_seed(Scalar s, Scalar phi) {
  Mat2<Scalar> d = Mat2<Scalar>::Zero();
  d(0, 0) = std::exp(-Scalar(2) * s) / Scalar(2);
  d(1, 1) = std::exp(Scalar(2) * s) / Scalar(2);
  Mat2<Scalar> r;
  r << std::cos(phi), std::sin(phi), -std::sin(phi), std::cos(phi);
  return r * d * r.transpose();
}

/// Same seed in the coordinates z = 2s (cos 2phi, sin 2phi), smooth at z = 0.
template <typename Scalar>
Mat2<Scalar> measurement_seed_cartesian(Scalar x, Scalar y) {
  const Scalar r = std::hypot(x, y);
  const Scalar shr = r < Scalar(1e-4) ? Scalar(1) + r * r / Scalar(6) : std::sinh(r) / r;
  const Scalar c = std::cosh(r);
  Mat2<Scalar> m;
  m << c - shr * x, shr * y, shr * y, c + shr * x;
  return m / Scalar(2);
}

template <typename Scalar>
struct SchurTerms {
  Mat2<Scalar> kept;      // alpha of the unmeasured mode
  Mat2<Scalar> measured;  // alpha of the measured mode
  Mat2<Scalar> cross;     // gamma with rows on the kept mode

  Scalar det_schur(const Mat2<Scalar>& seed) const {
    const Mat2<Scalar> m = measured + seed;
    const Mat2<Scalar> eps = kept - cross * m.inverse() * cross.transpose();
    return eps.determinant();
  }
  Scalar det_schur(Scalar s, Scalar phi) const { return det_schur(measurement_seed(s, phi)); }
  Scalar det_schur_cartesian(Scalar x, Scalar y) const { return det_schur(measurement_seed_cartesian(x, y)); }

  /// Homodyne limit: det(alpha - gamma u u^T gamma^T / u^T beta u) =
  /// det(alpha) (1 - u^T M u / u^T beta u) with M = gamma^T alpha^-1 gamma,
  /// minimized by the top generalized eigenvector of (M, beta).
  std::pair<Scalar, Vec2<Scalar>> homodyne_inf() const {
    const Mat2<Scalar> m = cross.transpose() * kept.inverse() * cross;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat2<Scalar>> es(Mat2<Scalar>((m + m.transpose()) / Scalar(2)),
                                                               measured);
    const Vec2<Scalar> u = es.eigenvectors().col(1).normalized();
    return {kept.determinant() * (Scalar(1) - es.eigenvalues()(1)), u};
  }
};

}  // namespace detail

/// Full discord evaluation with the location of the optimal measurement.
template <typename Scalar>
DiscordResult<Scalar> gaussian_discord_details(const CovarianceMatrix<Scalar>& cm, int measured_mode = 1,
                                               const DiscordOptions& opt = {}) {
  if (cm.modes() != 2) throw ValidationError("gaussian_discord needs a two-mode state");
  if (measured_mode != 0 && measured_mode != 1) throw ValidationError("measured_mode must be 0 or 1");
  if (opt.grid_s < 2 || opt.grid_phi < 2 || opt.starts < 1 || !(opt.s_max > 0)) {
    throw ValidationError("invalid discord search options");
  }
  require_physical(cm, "gaussian_discord");

  const int kept_mode = 1 - measured_mode;
  const detail::SchurTerms<Scalar> terms{cm.block(kept_mode, kept_mode), cm.block(measured_mode, measured_mode),
                                         cm.block(kept_mode, measured_mode)};

  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar radius = Scalar(2) * Scalar(opt.s_max);
  const Scalar dr = radius / Scalar(opt.grid_s - 1);
  const Scalar dphi = pi / Scalar(opt.grid_phi);

  struct Point {
    Scalar x, y, value;
  };
  auto at = [&](Scalar x, Scalar y) {
    const Scalar r = std::hypot(x, y);
    if (r > radius) {
      x *= radius / r;
      y *= radius / r;
    }
    return Point{x, y, terms.det_schur_cartesian(x, y)};
  };

  std::vector<Point> grid;
  grid.reserve(static_cast<std::size_t>(opt.grid_s) * opt.grid_phi);
  grid.push_back(at(0, 0));
  for (int i = 1; i < opt.grid_s; ++i) {
    for (int j = 0; j < opt.grid_phi; ++j) {
      const Scalar r = dr * Scalar(i), a = Scalar(2) * dphi * Scalar(j);
      grid.push_back(at(r * std::cos(a), r * std::sin(a)));
    }
  }
  const auto n_starts = std::min<std::size_t>(opt.starts, grid.size());
  std::partial_sort(grid.begin(), grid.begin() + n_starts, grid.end(),
                    [](const Point& a, const Point& b) { return a.value < b.value; });

  Point best = grid.front();
  int total_iterations = 0;
  for (std::size_t k = 0; k < n_starts; ++k) {
    Point cur = grid[k];
    Scalar h = dr;
    int it = 0;
    while (h > Scalar(opt.step_tol) * radius) {
      if (++it > opt.max_iterations) {
        std::ostringstream os;
        os << "discord infimum search did not converge: z=(" << static_cast<double>(cur.x) << ", "
           << static_cast<double>(cur.y) << ") det=" << static_cast<double>(cur.value)
           << " step=" << static_cast<double>(h);
        throw NumericalError(os.str());
      }
      Point next = cur;
      for (int a = -1; a <= 1; ++a) {
        for (int b = -1; b <= 1; ++b) {
          if (a == 0 && b == 0) continue;
          const Point p = at(cur.x + Scalar(a) * h, cur.y + Scalar(b) * h);
          if (p.value < next.value) next = p;
        }
      }
      if (next.value < cur.value) {
        cur = next;
      } else {
        h /= Scalar(2);
      }
    }
    total_iterations += it;
    if (cur.value < best.value) best = cur;
  }

  DiscordResult<Scalar> out;
  const auto [hom_value, hom_u] = terms.homodyne_inf();
  Scalar phi;
  if (hom_value < best.value) {
    out.inf_det_schur = hom_value;
    out.s_opt = std::numeric_limits<Scalar>::infinity();
    // The seed is squeezed along (cos phi, -sin phi).
    phi = std::atan2(-hom_u(1), hom_u(0));
  } else {
    out.inf_det_schur = best.value;
    out.s_opt = std::hypot(best.x, best.y) / Scalar(2);
    phi = std::atan2(best.y, best.x) / Scalar(2);
  }
  phi = std::fmod(phi, pi);
  out.phi_opt = phi < Scalar(0) ? phi + pi : phi;
  if (out.phi_opt >= pi) out.phi_opt = 0;
  out.iterations = total_iterations;

  const auto spec = symplectic_eigenvalues(cm);
  const Scalar x_measured = Scalar(2) * std::sqrt(terms.measured.determinant());
  const Scalar x_schur = Scalar(2) * std::sqrt(std::max(Scalar(0), out.inf_det_schur));
  const Scalar d = entropy_function(x_measured) - entropy_function(Scalar(2) * spec.values[0]) -
                   entropy_function(Scalar(2) * spec.values[1]) + entropy_function(x_schur);

  if (d < Scalar(-1e-6)) {
    std::ostringstream os;
    os << "gaussian_discord evaluated to " << static_cast<double>(d) << " (inf det eps "
       << static_cast<double>(out.inf_det_schur) << ")";
    throw NumericalError(os.str());
  }
  out.value = std::max(Scalar(0), clamp_to_zero(d));
  return out;
}

/// Gaussian discord D(cm) with the measurement performed on `measured_mode`
/// (zero-based; the default measures the second mode).
template <typename Scalar>
Scalar gaussian_discord(const CovarianceMatrix<Scalar>& cm, int measured_mode = 1, const DiscordOptions& opt = {}) {
  return gaussian_discord_details(cm, measured_mode, opt).value;
}

}  // namespace optoact
