#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <sstream>

#include "optoact/errors.hpp"
#include "optoact/gaussian.hpp"

namespace optoact {

/// Largest real part over the spectrum of `k`.
template <typename Scalar>
Scalar spectral_abscissa(const Mat<Scalar>& k) {
  if (k.rows() != k.cols() || k.rows() == 0) throw ValidationError("spectral_abscissa needs a square matrix");
  Eigen::EigenSolver<Mat<Scalar>> es(k, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed on drift matrix");
  return es.eigenvalues().real().maxCoeff();
}

/// True iff every eigenvalue of `k` has negative real part.
template <typename Scalar>
bool is_hurwitz(const Mat<Scalar>& k) {
  return spectral_abscissa(k) < Scalar(0);
}

namespace detail {

/// Packed index of the (i <= j) entry of an n x n symmetric matrix.
inline Eigen::Index sym_index(Eigen::Index i, Eigen::Index j, Eigen::Index n) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i - 1) / 2 + (j - i);
}

template <typename Scalar>
Mat<Scalar> lyapunov_residual(const Mat<Scalar>& k, const Mat<Scalar>& v, const Mat<Scalar>& d) {
  const Mat<Scalar> kv = k * v;
  return kv + kv.transpose() + d;
}

}  // namespace detail

/// Unique symmetric solution of K V + V K^T + D = 0 for Hurwitz K, solved
/// as a dense linear system over the n(n+1)/2 independent entries of V with
/// one step of iterative refinement. Residual is held below 1e-10 ||D||_F.
template <typename Scalar>
CovarianceMatrix<Scalar> steady_state(const Mat<Scalar>& k, const Mat<Scalar>& d) {
  const Eigen::Index n = k.rows();
  if (k.cols() != n || d.rows() != n || d.cols() != n) throw ValidationError("steady_state: dimension mismatch");
  if ((d - d.transpose()).cwiseAbs().maxCoeff() > Scalar(kSymmetryTol) * std::max(Scalar(1), d.cwiseAbs().maxCoeff())) {
    throw ValidationError("steady_state: diffusion matrix is not symmetric");
  }
  const Scalar abscissa = spectral_abscissa(k);
  if (!(abscissa < Scalar(0))) {
    std::ostringstream os;
    os << "drift matrix is not Hurwitz (max Re eigenvalue " << static_cast<double>(abscissa)
       << "); no steady state exists";
    throw NoSteadyStateError(os.str());
  }

  const Eigen::Index m = n * (n + 1) / 2;
  Mat<Scalar> a = Mat<Scalar>::Zero(m, m);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const Eigen::Index row = detail::sym_index(i, j, n);
      for (Eigen::Index l = 0; l < n; ++l) {
        a(row, detail::sym_index(l, j, n)) += k(i, l);
        a(row, detail::sym_index(i, l, n)) += k(j, l);
      }
      rhs(row) = -d(i, j);
    }
  }
  const Eigen::FullPivLU<Mat<Scalar>> lu(a);
  if (!lu.isInvertible()) throw NumericalError("steady_state: Lyapunov operator is singular");

  auto unpack = [n](const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
    Mat<Scalar> v(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j) v(i, j) = v(j, i) = x(detail::sym_index(i, j, n));
    return v;
  };
  auto pack = [n, m](const Mat<Scalar>& r) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x(m);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j) x(detail::sym_index(i, j, n)) = r(i, j);
    return x;
  };

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x = lu.solve(rhs);
  Mat<Scalar> v = unpack(x);
  const Mat<Scalar> r = detail::lyapunov_residual(k, v, d);
  x -= lu.solve(pack(r));
  v = unpack(x);

  const Scalar d_norm = d.norm();
  const Scalar res = detail::lyapunov_residual(k, v, d).norm();
  if (res > Scalar(1e-10) * std::max(d_norm, std::numeric_limits<Scalar>::min())) {
    std::ostringstream os;
    os << "steady_state: residual " << static_cast<double>(res) << " exceeds 1e-10 * ||D|| = "
       << static_cast<double>(Scalar(1e-10) * d_norm);
    throw NumericalError(os.str());
  }
  return CovarianceMatrix<Scalar>(v);
}

}  // namespace optoact
