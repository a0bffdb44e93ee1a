#pragma once

// Dense matrix-function kernel: economy QR with a deterministic sign
// convention, thin SVD, spectral norm, and the two structure-preserving
// matrix functions the geodesic routines are built on -- the exponential of
// a skew-symmetric matrix and the principal logarithm of an orthogonal
// matrix. Both exploit normality: the exponential goes through the complex
// eigendecomposition of the (Hermitian) matrix i*S, the logarithm through
// the real Schur form, whose 2x2 blocks are plane rotations that are handled
// analytically. Matrices are stored column-major (Eigen default).

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace stgeo {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Input fails a structural invariant (dimensions, finiteness, symmetry...).
struct InvariantViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not deliver its advertised accuracy.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The principal matrix logarithm is undefined or ill-conditioned because an
/// eigenvalue angle lies within `angle_guard` of +-pi.
struct EigenvalueNearMinusOne : std::runtime_error {
  explicit EigenvalueNearMinusOne(double angle)
      : std::runtime_error(
            "principal logarithm undefined: eigenvalue angle " +
            std::to_string(angle) + " is too close to pi"),
        max_angle_(angle) {}

  /// Largest eigenvalue angle |phi| found on the input (~pi on failure).
  double max_angle() const { return max_angle_; }

 private:
  double max_angle_;
};

inline void require(bool cond, const char* msg) {
  if (!cond) throw InvariantViolation(msg);
}

inline void require_finite(const MatrixXd& a, const char* what) {
  if (!a.allFinite())
    throw InvariantViolation(std::string(what) + ": non-finite entries");
}

/// Operator 2-norm (largest singular value).
///
/// Computed from the dominant eigenvalue of the Gram matrix on the smaller
/// side; accurate to machine precision for the top singular value.
inline double spectral_norm(const MatrixXd& a) {
  require_finite(a, "spectral_norm");
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 || a.cols() == 1) return a.norm();
  MatrixXd gram;
  if (a.rows() <= a.cols())
    gram.noalias() = a * a.transpose();
  else
    gram.noalias() = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram,
                                             Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalError("spectral_norm: eigensolver failed");
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// Square matrix with ||S + S^T||_max <= 1e-12 * max(1, ||S||_max).
class SkewSymmetricMatrix {
 public:
  explicit SkewSymmetricMatrix(MatrixXd s) : s_(std::move(s)) {
    require(s_.rows() == s_.cols(), "SkewSymmetricMatrix: not square");
    require(s_.rows() > 0, "SkewSymmetricMatrix: empty");
    require_finite(s_, "SkewSymmetricMatrix");
    const double scale = std::max(1.0, s_.cwiseAbs().maxCoeff());
    const double asym = (s_ + s_.transpose()).cwiseAbs().maxCoeff();
    require(asym <= 1e-12 * scale, "SkewSymmetricMatrix: not skew-symmetric");
  }

  const MatrixXd& matrix() const { return s_; }
  Index dim() const { return s_.rows(); }

 private:
  MatrixXd s_;
};

/// Square matrix with ||V^T V - I||_2 <= 1e-10.
class OrthogonalMatrix {
 public:
  explicit OrthogonalMatrix(MatrixXd v) : v_(std::move(v)) {
    require(v_.rows() == v_.cols(), "OrthogonalMatrix: not square");
    require(v_.rows() > 0, "OrthogonalMatrix: empty");
    require_finite(v_, "OrthogonalMatrix");
    MatrixXd res = v_.transpose() * v_;
    res.diagonal().array() -= 1.0;
    // Frobenius dominates the 2-norm, so it is checked first; the exact
    // spectral norm is only needed near the boundary.
    if (res.norm() > 1e-10)
      require(spectral_norm(res) <= 1e-10, "OrthogonalMatrix: not orthogonal");
  }

  const MatrixXd& matrix() const { return v_; }
  Index dim() const { return v_.rows(); }

 private:
  MatrixXd v_;
};

struct QrFactors {
  MatrixXd q;  ///< n x p, orthonormal columns
  MatrixXd r;  ///< p x p, upper triangular with nonnegative diagonal
};

/// Economy-size QR factorization A = Q R for A with n >= p.
///
/// The diagonal of R is forced nonnegative so that the factorization is a
/// deterministic function of the input bytes. Rank-deficient inputs are
/// fine: R simply carries (near-)zero diagonal entries and Q stays
/// column-orthonormal.
inline QrFactors qr_economy(const MatrixXd& a) {
  require(a.rows() >= a.cols(), "qr_economy: need rows >= cols");
  require(a.cols() > 0, "qr_economy: empty");
  require_finite(a, "qr_economy");
  const Index n = a.rows(), p = a.cols();
  Eigen::HouseholderQR<MatrixXd> fac(a);
  MatrixXd q = fac.householderQ() * MatrixXd::Identity(n, p);
  MatrixXd r = fac.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) {
      r.row(j) = -r.row(j);
      q.col(j) = -q.col(j);
    }
  }
  return {std::move(q), std::move(r)};
}

struct SvdFactors {
  MatrixXd u;         ///< m x min(m,k), orthonormal columns
  VectorXd singular;  ///< nonincreasing, nonnegative
  MatrixXd v;         ///< k x min(m,k), orthonormal columns
};

/// Thin SVD A = U diag(singular) V^T.
inline SvdFactors svd(const MatrixXd& a) {
  require(a.size() > 0, "svd: empty");
  require_finite(a, "svd");
  Eigen::BDCSVD<MatrixXd> fac(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {fac.matrixU(), fac.singularValues(), fac.matrixV()};
}

/// Matrix exponential of a skew-symmetric matrix; the result is orthogonal.
///
/// i*S is Hermitian, so a self-adjoint eigensolver yields a reliably unitary
/// eigenbasis Q and real eigenvalues lambda_j; then exp(S) =
/// Q diag(e^{-i lambda_j}) Q^H, whose imaginary part must vanish and is
/// dropped after a residue check.
inline OrthogonalMatrix expm_skew(const SkewSymmetricMatrix& skew) {
  const Index p = skew.dim();
  const std::complex<double> iunit(0.0, 1.0);
  Eigen::MatrixXcd herm = iunit * skew.matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> evd(herm);
  if (evd.info() != Eigen::Success)
    throw NumericalError("expm_skew: eigendecomposition failed");
  Eigen::VectorXcd phases(p);
  for (Index j = 0; j < p; ++j)
    phases(j) = std::polar(1.0, -evd.eigenvalues()(j));
  Eigen::MatrixXcd w = evd.eigenvectors() * phases.asDiagonal() *
                       evd.eigenvectors().adjoint();
  if (w.imag().cwiseAbs().maxCoeff() >= 1e-12)
    throw NumericalError("expm_skew: imaginary residue above 1e-12");
  return OrthogonalMatrix(w.real());
}

/// Convenience overload validating skewness on entry.
inline OrthogonalMatrix expm_skew(const MatrixXd& s) {
  return expm_skew(SkewSymmetricMatrix(s));
}

/// Principal logarithm of an orthogonal matrix; the result is
/// skew-symmetric with ||log||_2 = max_j |phi_j| < pi.
///
/// Uses the real Schur form, which is quasi-diagonal for a normal input:
/// 1x1 blocks hold real eigenvalues +-1, 2x2 blocks are plane rotations
/// whose angle is read off with atan2. Throws EigenvalueNearMinusOne as soon
/// as any eigenvalue angle satisfies |phi| > pi - angle_guard, i.e. when the
/// principal branch is undefined or about to become ill-conditioned.
inline SkewSymmetricMatrix logm_orthogonal(const OrthogonalMatrix& v,
                                           double angle_guard = 1e-8) {
  const Index m = v.dim();
  Eigen::RealSchur<MatrixXd> schur(v.matrix());
  if (schur.info() != Eigen::Success)
    throw NumericalError("logm_orthogonal: Schur decomposition failed");
  const MatrixXd& t = schur.matrixT();

  constexpr double pi = 3.14159265358979323846;
  // First pass: collect rotation angles and find the spectral radius of the
  // log, so that a failure can still report max|phi|.
  std::vector<std::pair<Index, double>> blocks;  // (start index, angle)
  double max_angle = 0.0;
  bool guard_hit = false;
  for (Index i = 0; i < m;) {
    if (i + 1 < m && t(i + 1, i) != 0.0) {
      const double c = 0.5 * (t(i, i) + t(i + 1, i + 1));
      const double s = 0.5 * (t(i + 1, i) - t(i, i + 1));
      const double phi = std::atan2(s, c);
      blocks.emplace_back(i, phi);
      max_angle = std::max(max_angle, std::abs(phi));
      if (std::abs(phi) > pi - angle_guard) guard_hit = true;
      i += 2;
    } else {
      if (t(i, i) < 0.0) {  // real eigenvalue -1
        max_angle = pi;
        guard_hit = true;
      }
      i += 1;
    }
  }
  if (guard_hit) throw EigenvalueNearMinusOne(max_angle);

  MatrixXd lblk = MatrixXd::Zero(m, m);
  for (const auto& [i, phi] : blocks) {
    lblk(i, i + 1) = -phi;
    lblk(i + 1, i) = phi;
  }
  MatrixXd l = schur.matrixU() * lblk * schur.matrixU().transpose();
  l = 0.5 * (l - l.transpose().eval());  // kill roundoff asymmetry
  return SkewSymmetricMatrix(std::move(l));
}

inline SkewSymmetricMatrix logm_orthogonal(const MatrixXd& v,
                                           double angle_guard = 1e-8) {
  return logm_orthogonal(OrthogonalMatrix(v), angle_guard);
}

}  // namespace stgeo
