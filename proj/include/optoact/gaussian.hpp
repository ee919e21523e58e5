#pragma once

// Covariance-matrix representation of Gaussian states and the state-level
// measures built on it. Quadratures are ordered (q1, p1, q2, p2, ...) and
// the vacuum has variance 1/2 (hbar = 1).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "optoact/errors.hpp"

namespace optoact {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

/// Relative asymmetry accepted when constructing a covariance matrix.
inline constexpr double kSymmetryTol = 1e-8;
/// Symplectic eigenvalues may undershoot 1/2 by this much, scaled by
/// max(1, max|v_ij|), and still count as physical.
inline constexpr double kPhysicalTol = 1e-9;
/// Measures within this distance of zero are reported as exactly zero.
inline constexpr double kClampTol = 1e-9;

template <typename Scalar>
Scalar clamp_to_zero(Scalar x, Scalar tol = Scalar(kClampTol)) {
  return std::abs(x) <= tol ? Scalar(0) : x;
}

/// Symmetric 2n x 2n matrix of symmetrized quadrature second moments.
///
/// Construction checks shape, finiteness, symmetry and positive diagonal,
/// then stores the exactly symmetrized matrix. Physicality (the uncertainty
/// principle) is a property queried with check_physical(), not enforced
/// here, so that files can be imported with a force override.
template <typename Scalar = double>
class CovarianceMatrix {
 public:
  using Matrix = Mat<Scalar>;

  explicit CovarianceMatrix(const Matrix& m, Scalar sym_tol = Scalar(kSymmetryTol)) {
    if (m.rows() != m.cols() || m.rows() < 2 || m.rows() % 2 != 0) {
      std::ostringstream os;
      os << "covariance matrix must be square with even size >= 2, got " << m.rows() << "x"
         << m.cols();
      throw ValidationError(os.str());
    }
    if (!m.allFinite()) throw ValidationError("covariance matrix has non-finite entries");
    const Scalar scale = std::max(Scalar(1), m.cwiseAbs().maxCoeff());
    const Scalar asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > sym_tol * scale) {
      std::ostringstream os;
      os << "covariance matrix is not symmetric (max |v_ij - v_ji| = " << static_cast<double>(asym)
         << ")";
      throw ValidationError(os.str());
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!(m(i, i) > Scalar(0))) throw ValidationError("covariance matrix has non-positive diagonal");
    }
    m_ = (m + m.transpose()) / Scalar(2);
  }

  int modes() const { return static_cast<int>(m_.rows() / 2); }
  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  /// 2x2 block coupling modes a and b (alpha_a when a == b, gamma otherwise).
  Mat2<Scalar> block(int a, int b) const { return m_.template block<2, 2>(2 * a, 2 * b); }

  Scalar max_abs() const { return m_.cwiseAbs().maxCoeff(); }

  friend bool operator==(const CovarianceMatrix& a, const CovarianceMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Matrix m_;
};

/// Ascending symplectic eigenvalues, one per mode.
template <typename Scalar = double>
struct SymplecticSpectrum {
  std::vector<Scalar> values;

  Scalar min() const { return values.front(); }
  Scalar max() const { return values.back(); }
  std::size_t size() const { return values.size(); }
};

/// Per-mode phase-space rotation angles, canonicalized to [0, 2pi).
template <typename Scalar = double>
class RotationAngles {
 public:
  RotationAngles() = default;
  RotationAngles(std::initializer_list<Scalar> a) : RotationAngles(std::vector<Scalar>(a)) {}
  explicit RotationAngles(std::vector<Scalar> a) : angles_(std::move(a)) {
    const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    for (auto& x : angles_) {
      if (!std::isfinite(static_cast<double>(x))) throw ValidationError("rotation angle is not finite");
      x = std::fmod(x, two_pi);
      if (x < Scalar(0)) x += two_pi;
      if (x >= two_pi) x = Scalar(0);
    }
  }

  std::size_t size() const { return angles_.size(); }
  Scalar operator[](std::size_t i) const { return angles_[i]; }
  const std::vector<Scalar>& values() const { return angles_; }

 private:
  std::vector<Scalar> angles_;
};

// ---------------------------------------------------------------------------
// Constructors for common states

template <typename Scalar = double>
Mat<Scalar> symplectic_form(int n_modes) {
  Mat<Scalar> omega = Mat<Scalar>::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = Scalar(1);
    omega(2 * k + 1, 2 * k) = Scalar(-1);
  }
  return omega;
}

template <typename Scalar = double>
CovarianceMatrix<Scalar> vacuum(int n_modes) {
  return CovarianceMatrix<Scalar>(Mat<Scalar>::Identity(2 * n_modes, 2 * n_modes) / Scalar(2));
}

/// Single-mode thermal state with mean occupation nbar.
template <typename Scalar = double>
CovarianceMatrix<Scalar> thermal(Scalar nbar) {
  if (nbar < Scalar(0)) throw ValidationError("thermal occupation must be >= 0");
  return CovarianceMatrix<Scalar>(Mat<Scalar>::Identity(2, 2) * (nbar + Scalar(0.5)));
}

/// Single-mode squeezed vacuum: diag(e^{-2r}, e^{2r})/2 rotated by `phase`.
template <typename Scalar = double>
CovarianceMatrix<Scalar> squeezed_vacuum(Scalar r, Scalar phase = Scalar(0)) {
  if (r < Scalar(0)) throw ValidationError("squeezing parameter must be >= 0");
  Mat2<Scalar> d = Mat2<Scalar>::Zero();
  d(0, 0) = std::exp(-Scalar(2) * r) / Scalar(2);
  d(1, 1) = std::exp(Scalar(2) * r) / Scalar(2);
  Mat2<Scalar> rot;
  rot << std::cos(phase), std::sin(phase), -std::sin(phase), std::cos(phase);
  return CovarianceMatrix<Scalar>(Mat<Scalar>(rot * d * rot.transpose()));
}

/// Two-mode squeezed vacuum with squeezing r.
template <typename Scalar = double>
CovarianceMatrix<Scalar> two_mode_squeezed_vacuum(Scalar r) {
  const Scalar a = std::cosh(Scalar(2) * r) / Scalar(2);
  const Scalar c = std::sinh(Scalar(2) * r) / Scalar(2);
  Mat<Scalar> v = Mat<Scalar>::Zero(4, 4);
  v.diagonal().setConstant(a);
  v(0, 2) = v(2, 0) = c;
  v(1, 3) = v(3, 1) = -c;
  return CovarianceMatrix<Scalar>(v);
}

/// Block-diagonal state a (+) b; modes of a come first.
template <typename Scalar>
CovarianceMatrix<Scalar> direct_sum(const CovarianceMatrix<Scalar>& a, const CovarianceMatrix<Scalar>& b) {
  const auto na = a.dim();
  const auto nb = b.dim();
  Mat<Scalar> v = Mat<Scalar>::Zero(na + nb, na + nb);
  v.topLeftCorner(na, na) = a.matrix();
  v.bottomRightCorner(nb, nb) = b.matrix();
  return CovarianceMatrix<Scalar>(v);
}

// ---------------------------------------------------------------------------
// Spectra

namespace detail {

template <typename Scalar>
void check_mode_set(const std::vector<int>& modes, int n_modes, const char* what) {
  std::vector<int> sorted = modes;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError(std::string(what) + " contains a repeated mode index");
  }
  for (int m : modes) {
    if (m < 0 || m >= n_modes) {
      std::ostringstream os;
      os << what << " mode index " << m << " is out of range [0, " << n_modes << ")";
      throw ValidationError(os.str());
    }
  }
}

/// Symplectic spectrum of an arbitrary symmetric matrix via the eigenvalues
/// of Omega*m, which are +-i*nu_k for positive-definite m.
template <typename Scalar>
SymplecticSpectrum<Scalar> symplectic_spectrum_of(const Mat<Scalar>& m) {
  const int n = static_cast<int>(m.rows() / 2);
  const Mat<Scalar> a = symplectic_form<Scalar>(n) * m;
  Eigen::EigenSolver<Mat<Scalar>> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed on symplectic spectrum");

  const Scalar scale = std::max(Scalar(1), m.cwiseAbs().maxCoeff());
  const Scalar tol = Scalar(1e-7) * scale;
  std::vector<Scalar> moduli;
  moduli.reserve(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const auto lambda = es.eigenvalues()(i);
    if (std::abs(lambda.real()) > tol) {
      std::ostringstream os;
      os << "symplectic spectrum degenerate: eigenvalue of Omega*V with real part "
         << static_cast<double>(lambda.real()) << " (matrix not positive definite?)";
      throw NumericalError(os.str());
    }
    moduli.push_back(std::abs(lambda.imag()));
  }
  std::sort(moduli.begin(), moduli.end());
  SymplecticSpectrum<Scalar> out;
  out.values.reserve(n);
  for (int k = 0; k < n; ++k) {
    const Scalar lo = moduli[2 * k];
    const Scalar hi = moduli[2 * k + 1];
    if (hi - lo > tol) throw NumericalError("symplectic spectrum: eigenvalues of Omega*V do not pair");
    out.values.push_back((lo + hi) / Scalar(2));
  }
  return out;
}

}  // namespace detail

/// Symplectic eigenvalues of `cm`, ascending. Throws NumericalError when
/// the spectrum of Omega*V has real parts (V not positive definite).
template <typename Scalar>
SymplecticSpectrum<Scalar> symplectic_eigenvalues(const CovarianceMatrix<Scalar>& cm) {
  return detail::symplectic_spectrum_of<Scalar>(cm.matrix());
}

/// Closed form for two modes:
/// nu^2 = (D +- sqrt(D^2 - 4 det v)) / 2 with D = det a1 + det a2 + 2 det g.
template <typename Scalar>
SymplecticSpectrum<Scalar> symplectic_eigenvalues_two_mode(const CovarianceMatrix<Scalar>& cm) {
  if (cm.modes() != 2) throw ValidationError("closed-form spectrum needs a two-mode state");
  const Scalar delta =
      cm.block(0, 0).determinant() + cm.block(1, 1).determinant() + Scalar(2) * cm.block(0, 1).determinant();
  const Scalar det = cm.matrix().determinant();
  const Scalar disc = std::sqrt(std::max(Scalar(0), delta * delta - Scalar(4) * det));
  const Scalar lo = std::sqrt(std::max(Scalar(0), (delta - disc) / Scalar(2)));
  const Scalar hi = std::sqrt(std::max(Scalar(0), (delta + disc) / Scalar(2)));
  return SymplecticSpectrum<Scalar>{{lo, hi}};
}

/// True iff every symplectic eigenvalue is >= 1/2 - tol * max(1, max|v_ij|).
template <typename Scalar>
bool check_physical(const CovarianceMatrix<Scalar>& cm, Scalar tol = Scalar(kPhysicalTol)) {
  Eigen::LLT<Mat<Scalar>> llt(cm.matrix());
  if (llt.info() != Eigen::Success) return false;
  try {
    const auto spec = symplectic_eigenvalues(cm);
    return spec.min() >= Scalar(0.5) - tol * std::max(Scalar(1), cm.max_abs());
  } catch (const NumericalError&) {
    return false;
  }
}

template <typename Scalar>
void require_physical(const CovarianceMatrix<Scalar>& cm, const char* what) {
  if (!check_physical(cm)) {
    throw ValidationError(std::string(what) + ": covariance matrix violates the uncertainty principle");
  }
}

// ---------------------------------------------------------------------------
// Local operations

/// Mirror reflection p -> -p on the given modes.
template <typename Scalar>
CovarianceMatrix<Scalar> partial_transpose(const CovarianceMatrix<Scalar>& cm, const std::vector<int>& modes) {
  detail::check_mode_set<Scalar>(modes, cm.modes(), "partition");
  Mat<Scalar> v = cm.matrix();
  for (int m : modes) {
    v.row(2 * m + 1) *= Scalar(-1);
    v.col(2 * m + 1) *= Scalar(-1);
  }
  return CovarianceMatrix<Scalar>(v);
}

/// R v R^T with R = (+)_i [[cos t_i, sin t_i], [-sin t_i, cos t_i]].
template <typename Scalar>
CovarianceMatrix<Scalar> rotate_local(const CovarianceMatrix<Scalar>& cm, const RotationAngles<Scalar>& angles) {
  if (static_cast<int>(angles.size()) != cm.modes()) {
    std::ostringstream os;
    os << "rotate_local: " << angles.size() << " angles for " << cm.modes() << " modes";
    throw ValidationError(os.str());
  }
  Mat<Scalar> r = Mat<Scalar>::Zero(cm.dim(), cm.dim());
  for (int k = 0; k < cm.modes(); ++k) {
    const Scalar c = std::cos(angles[k]);
    const Scalar s = std::sin(angles[k]);
    r(2 * k, 2 * k) = c;
    r(2 * k, 2 * k + 1) = s;
    r(2 * k + 1, 2 * k) = -s;
    r(2 * k + 1, 2 * k + 1) = c;
  }
  return CovarianceMatrix<Scalar>(Mat<Scalar>(r * cm.matrix() * r.transpose()));
}

/// Gaussian partial trace: principal submatrix on `keep`, in the given order.
template <typename Scalar>
CovarianceMatrix<Scalar> reduce(const CovarianceMatrix<Scalar>& cm, const std::vector<int>& keep) {
  if (keep.empty()) throw ValidationError("reduce: keep set is empty");
  detail::check_mode_set<Scalar>(keep, cm.modes(), "keep set");
  const auto k = static_cast<Eigen::Index>(keep.size());
  Mat<Scalar> v(2 * k, 2 * k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      v.template block<2, 2>(2 * a, 2 * b) = cm.block(keep[a], keep[b]);
    }
  }
  return CovarianceMatrix<Scalar>(v);
}

/// Tensor product of the single-mode reductions (all inter-mode blocks zeroed).
template <typename Scalar>
CovarianceMatrix<Scalar> strip_correlations(const CovarianceMatrix<Scalar>& cm) {
  Mat<Scalar> v = Mat<Scalar>::Zero(cm.dim(), cm.dim());
  for (int k = 0; k < cm.modes(); ++k) v.template block<2, 2>(2 * k, 2 * k) = cm.block(k, k);
  return CovarianceMatrix<Scalar>(v);
}

/// (v_qq + v_pp)/2 - 1/2 for a single-mode state.
template <typename Scalar>
Scalar mean_occupation(const CovarianceMatrix<Scalar>& cm) {
  if (cm.modes() != 1) throw ValidationError("mean_occupation needs a single-mode state");
  require_physical(cm, "mean_occupation");
  return std::max(Scalar(0), (cm(0, 0) + cm(1, 1)) / Scalar(2) - Scalar(0.5));
}

// ---------------------------------------------------------------------------
// Entanglement

/// Sum over partially transposed symplectic eigenvalues of max(0, -ln 2 nu).
/// For two modes this is the usual max[0, -ln 2 nu_-].
template <typename Scalar>
Scalar log_negativity(const CovarianceMatrix<Scalar>& cm, const std::vector<int>& partition) {
  if (partition.empty() || static_cast<int>(partition.size()) >= cm.modes()) {
    throw ValidationError("log_negativity: partition must be a proper nonempty subset of modes");
  }
  require_physical(cm, "log_negativity");
  const auto spec = symplectic_eigenvalues(partial_transpose(cm, partition));
  Scalar e = 0;
  for (Scalar nu : spec.values) e += std::max(Scalar(0), -std::log(Scalar(2) * nu));
  return clamp_to_zero(e);
}

/// Smallest symplectic eigenvalue of the state with mode 1 transposed.
template <typename Scalar>
Scalar partial_transpose_min_eigenvalue(const CovarianceMatrix<Scalar>& cm) {
  if (cm.modes() != 2) throw ValidationError("PPT test is defined here for two-mode states");
  return symplectic_eigenvalues(partial_transpose(cm, {1})).min();
}

/// Simon's criterion: a 1x1-mode Gaussian state is separable iff its
/// partial transpose is a bona fide covariance matrix.
template <typename Scalar>
bool ppt_separable(const CovarianceMatrix<Scalar>& cm, Scalar tol = Scalar(kClampTol)) {
  if (cm.modes() != 2) throw ValidationError("ppt_separable needs a two-mode state");
  require_physical(cm, "ppt_separable");
  return partial_transpose_min_eigenvalue(cm) >= Scalar(0.5) - tol;
}

}  // namespace optoact
