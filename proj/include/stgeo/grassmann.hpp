#pragma once

// The Grassmann manifold Gr(n,p) of p-dimensional subspaces of R^n, realized
// as the quotient of St(n,p) by right orthogonal transformations. Points are
// handled through Stiefel representatives; tangents are the horizontal
// Stiefel tangents (U^T Delta = 0). Both the exponential and the logarithm
// have closed forms:
//
//   Exp_[U](Delta) = [ U D cos(S) D^T + Qh sin(S) D^T ],  Delta = Qh S D^T,
//   Log_[U]([Ut])  = Qh arctan(S) D^T,  Qh S D^T = (I - U U^T) Ut (U^T Ut)^-1,
//
// with sin/cos/arctan applied entrywise on the diagonal. The exponential is
// also the A = 0 special case of the Stiefel exponential, which provides an
// independent cross-check of the quotient machinery.

#include <cmath>
#include <utility>

#include "stgeo/stiefel.hpp"

namespace stgeo {

/// U^T Ut is singular: the subspaces share a principal angle of pi/2 (cut
/// locus), so the logarithm is undefined.
struct SingularOverlap : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A point of Gr(n,p), stored as a Stiefel representative of its column
/// span. Equality is subspace equality: ||U1 U1^T - U2 U2^T||_2 <= 1e-10.
class GrassmannPoint {
 public:
  explicit GrassmannPoint(StiefelPoint representative)
      : rep_(std::move(representative)) {}
  explicit GrassmannPoint(MatrixXd u) : rep_(StiefelPoint(std::move(u))) {}

  const StiefelPoint& representative() const { return rep_; }
  const MatrixXd& matrix() const { return rep_.matrix(); }
  Index rows() const { return rep_.rows(); }
  Index cols() const { return rep_.cols(); }

 private:
  StiefelPoint rep_;
};

/// Distance between equal-dimension subspaces in the projector 2-norm,
/// which equals the sine of the largest principal angle. This is computed
/// from the residual (I - P_b) U_a = U_a - U_b (U_b^T U_a), whose singular
/// values are exactly those sines; unlike sqrt(1 - sigma_min(U_a^T U_b)^2)
/// this form does not cancel for nearly identical subspaces.
inline double subspace_gap(const GrassmannPoint& a, const GrassmannPoint& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "subspace_gap: dimension mismatch");
  MatrixXd res =
      a.matrix() - b.matrix() * (b.matrix().transpose() * a.matrix());
  return std::min(1.0, spectral_norm(res));
}

inline bool same_subspace(const GrassmannPoint& a, const GrassmannPoint& b,
                          double tol = 1e-10) {
  return subspace_gap(a, b) <= tol;
}

/// Principal angles between two subspaces, nondecreasing, in [0, pi/2].
/// Small angles come from the sines (residual SVD), large ones from the
/// cosines (overlap SVD), so every angle is computed without cancellation.
inline VectorXd principal_angles(const GrassmannPoint& a,
                                 const GrassmannPoint& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "principal_angles: dimension mismatch");
  const Index p = a.cols();
  VectorXd cosines = svd(a.matrix().transpose() * b.matrix()).singular;
  MatrixXd res =
      b.matrix() - a.matrix() * (a.matrix().transpose() * b.matrix());
  VectorXd sines = svd(res).singular;  // nonincreasing: largest angle first
  VectorXd angles(p);
  for (Index j = 0; j < p; ++j) {
    const double c = std::min(1.0, std::max(-1.0, cosines(j)));
    const double s = std::min(1.0, std::max(0.0, sines(p - 1 - j)));
    angles(j) = c * c >= 0.5 ? std::asin(s) : std::acos(c);
  }
  return angles;  // cosines nonincreasing -> angles nondecreasing
}

/// Horizontal tangent at a Grassmann point: U^T Delta = 0 within 1e-10.
class HorizontalTangent {
 public:
  HorizontalTangent(GrassmannPoint base, MatrixXd delta)
      : base_(std::move(base)), delta_(std::move(delta)) {
    require(delta_.rows() == base_.rows() && delta_.cols() == base_.cols(),
            "HorizontalTangent: dimension mismatch with base point");
    require_finite(delta_, "HorizontalTangent");
    require((base_.matrix().transpose() * delta_).norm() <=
                1e-10 * std::max(1.0, delta_.norm()),
            "HorizontalTangent: not horizontal (U^T Delta != 0)");
  }

  const GrassmannPoint& base() const { return base_; }
  const MatrixXd& matrix() const { return delta_; }

 private:
  GrassmannPoint base_;
  MatrixXd delta_;
};

/// Riemannian exponential on Gr(n,p) via the thin SVD Delta = Qh S D^T.
inline GrassmannPoint grassmann_exp(const GrassmannPoint& u,
                                    const HorizontalTangent& delta) {
  require(delta.base().rows() == u.rows() && delta.base().cols() == u.cols() &&
              same_subspace(delta.base(), u),
          "grassmann_exp: tangent not based at the given subspace");
  SvdFactors f = svd(delta.matrix());
  VectorXd cs = f.singular.array().cos();
  VectorXd sn = f.singular.array().sin();
  MatrixXd out = u.matrix() * (f.v * cs.asDiagonal() * f.v.transpose()) +
                 f.u * (sn.asDiagonal() * f.v.transpose());
  return GrassmannPoint(StiefelPoint(std::move(out)));
}

/// Riemannian logarithm on Gr(n,p): with Qh S D^T the thin SVD of
/// (I - U U^T) Ut (U^T Ut)^{-1}, returns Qh arctan(S) D^T. The inverse is
/// applied through the SVD of M = U^T Ut and fails with SingularOverlap when
/// the smallest singular value of M drops below 1e-12.
inline HorizontalTangent grassmann_log(const GrassmannPoint& u,
                                       const GrassmannPoint& ut) {
  require(u.rows() == ut.rows() && u.cols() == ut.cols(),
          "grassmann_log: dimension mismatch");
  MatrixXd m = u.matrix().transpose() * ut.matrix();
  SvdFactors mf = svd(m);
  if (mf.singular.minCoeff() < 1e-12)
    throw SingularOverlap(
        "grassmann_log: subspaces share a principal angle of pi/2");
  MatrixXd minv =
      mf.v * mf.singular.cwiseInverse().asDiagonal() * mf.u.transpose();
  MatrixXd l = (ut.matrix() - u.matrix() * m) * minv;
  SvdFactors lf = svd(l);
  VectorXd theta = lf.singular.array().atan();
  MatrixXd delta = lf.u * theta.asDiagonal() * lf.v.transpose();
  return HorizontalTangent(u, std::move(delta));
}

}  // namespace stgeo
