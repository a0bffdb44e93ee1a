#pragma once

// The Stiefel manifold St(n,p) = { U in R^{n x p} : U^T U = I } under the
// canonical metric  <D1, D2>_U = tr(D1^T (I - 1/2 U U^T) D2).
//
// Provides tangent projection, the closed-form Riemannian exponential
//
//   A = U^T D,   Q_E R_E = qr((I - U U^T) D),
//   (M; N_E) = expm([[A, -R_E^T], [R_E, 0]]) (I_p; 0),
//   Exp_U(D) = U M + Q_E N_E,
//
// and its iterative inverse: starting from an orthogonally completed and
// Procrustes-normalized 2p x 2p matrix V_0 = [[M, X_0], [N, Y_0]], the loop
// reads off the partitioned principal log [[A_k, -B_k^T], [B_k, C_k]] of V_k
// and applies the block correction V_{k+1} = V_k diag(I, expm(-C_k)) until
// ||C_k|| falls below the threshold; the logarithm is then U A_k + Q B_k.
// Near the base point the residual contracts linearly with factor < 1/2 per
// step. Random-data helpers mirror that construction with a seedable,
// platform-stable generator.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "stgeo/matfunc.hpp"
#include "stgeo/matrix_io.hpp"
#include "stgeo/rng.hpp"

namespace stgeo {

/// (sqrt(5) - 1)/2, the iterate-norm level below which the block residual
/// provably halves each step.
inline double contraction_norm_limit() { return 0.5 * (std::sqrt(5.0) - 1.0); }

/// A point on St(n,p): an n x p matrix with ||U^T U - I||_2 <= 1e-10.
///
/// Immutable value type; copies share the underlying storage, which also
/// serves as the identity token tying tangent vectors to their base point.
class StiefelPoint {
 public:
  explicit StiefelPoint(MatrixXd u)
      : u_(std::make_shared<const MatrixXd>(std::move(u))) {
    require(u_->rows() >= u_->cols() && u_->cols() > 0,
            "StiefelPoint: need n >= p >= 1");
    require_finite(*u_, "StiefelPoint");
    MatrixXd res = u_->transpose() * (*u_);
    res.diagonal().array() -= 1.0;
    if (res.norm() > 1e-10)
      require(spectral_norm(res) <= 1e-10,
              "StiefelPoint: columns not orthonormal");
  }

  const MatrixXd& matrix() const { return *u_; }
  Index rows() const { return u_->rows(); }
  Index cols() const { return u_->cols(); }

  /// True when both points denote the same base (shared storage or equal
  /// entries).
  bool same_base(const StiefelPoint& other) const {
    if (u_ == other.u_) return true;
    return u_->rows() == other.u_->rows() && u_->cols() == other.u_->cols() &&
           *u_ == *other.u_;
  }

 private:
  std::shared_ptr<const MatrixXd> u_;
};

/// Tangent vector at a Stiefel point: U^T Delta is skew-symmetric.
class StiefelTangent {
 public:
  StiefelTangent(StiefelPoint base, MatrixXd delta)
      : base_(std::move(base)), delta_(std::move(delta)) {
    require(delta_.rows() == base_.rows() && delta_.cols() == base_.cols(),
            "StiefelTangent: dimension mismatch with base point");
    require_finite(delta_, "StiefelTangent");
    MatrixXd res = base_.matrix().transpose() * delta_;
    res += res.transpose().eval();
    require(res.norm() <= 1e-10 * std::max(1.0, delta_.norm()),
            "StiefelTangent: U^T Delta is not skew-symmetric");
  }

  const StiefelPoint& base() const { return base_; }
  const MatrixXd& matrix() const { return delta_; }

 private:
  StiefelPoint base_;
  MatrixXd delta_;
};

/// Projects an arbitrary n x p matrix onto the tangent space at U:
/// Delta = U skew(U^T X) + (I - U U^T) X = X - U sym(U^T X).
/// Idempotent on tangents (a tangent input is returned bit for bit).
inline StiefelTangent project_to_tangent(const StiefelPoint& u,
                                         const MatrixXd& x) {
  require(x.rows() == u.rows() && x.cols() == u.cols(),
          "project_to_tangent: dimension mismatch");
  require_finite(x, "project_to_tangent");
  MatrixXd b = u.matrix().transpose() * x;
  MatrixXd sym = 0.5 * (b + b.transpose().eval());
  return StiefelTangent(u, x - u.matrix() * sym);
}

/// Canonical inner product tr(D1^T (I - 1/2 U U^T) D2) of two tangents with
/// the same base point.
inline double canonical_inner(const StiefelPoint& u, const StiefelTangent& d1,
                              const StiefelTangent& d2) {
  require(d1.base().same_base(u) && d2.base().same_base(u),
          "canonical_inner: tangents not based at the given point");
  MatrixXd a1 = u.matrix().transpose() * d1.matrix();
  MatrixXd a2 = u.matrix().transpose() * d2.matrix();
  return d1.matrix().cwiseProduct(d2.matrix()).sum() -
         0.5 * a1.cwiseProduct(a2).sum();
}

/// Canonical norm sqrt(<D, D>_U).
inline double canonical_norm(const StiefelPoint& u, const StiefelTangent& d) {
  return std::sqrt(std::max(0.0, canonical_inner(u, d, d)));
}

/// Factor bundle of the Riemannian exponential. (M; N_E) are the left
/// blocks of a 2p x 2p orthogonal matrix, so M^T M + N_E^T N_E = I.
struct ExpFactors {
  SkewSymmetricMatrix a;  ///< U^T Delta, p x p
  MatrixXd q_e;           ///< n x p, orthonormal columns
  MatrixXd r_e;           ///< p x p, upper triangular
  MatrixXd m;             ///< p x p
  MatrixXd n_e;           ///< p x p
};

struct ExpResult {
  StiefelPoint point;
  ExpFactors factors;
};

/// Riemannian exponential: endpoint of the unit-time geodesic leaving U
/// with velocity delta.
inline ExpResult stiefel_exp(const StiefelPoint& u,
                             const StiefelTangent& delta) {
  require(delta.base().same_base(u), "stiefel_exp: tangent not based at U");
  const Index p = u.cols();
  MatrixXd a = u.matrix().transpose() * delta.matrix();
  a = 0.5 * (a - a.transpose().eval());  // exactly skew; tangency validated
  MatrixXd k = delta.matrix() - u.matrix() * a;
  QrFactors qr = qr_economy(k);

  MatrixXd gen = MatrixXd::Zero(2 * p, 2 * p);
  gen.topLeftCorner(p, p) = a;
  gen.topRightCorner(p, p) = -qr.r.transpose();
  gen.bottomLeftCorner(p, p) = qr.r;
  OrthogonalMatrix big = expm_skew(SkewSymmetricMatrix(gen));

  MatrixXd m = big.matrix().topLeftCorner(p, p);
  MatrixXd n_e = big.matrix().bottomLeftCorner(p, p);
  MatrixXd out = u.matrix() * m + qr.q * n_e;

  MatrixXd gram = m.transpose() * m + n_e.transpose() * n_e;
  gram.diagonal().array() -= 1.0;
  require(gram.norm() <= 1e-10, "stiefel_exp: exponential blocks inconsistent");

  return {StiefelPoint(std::move(out)),
          ExpFactors{SkewSymmetricMatrix(std::move(a)), std::move(qr.q),
                     std::move(qr.r), std::move(m), std::move(n_e)}};
}

/// The orthogonal completion could not be built (rank-deficient basis even
/// after re-randomizing once).
struct CompletionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Procrustes-normalized orthogonal completion used to start the logarithm
/// iteration. V0 = [[M, X0], [N, Y0]] is orthogonal, Y0 is symmetric
/// positive semidefinite with eigenvalues in [0,1], and ||N||_2 = ||X0||_2
/// (the CS-decomposition pairing of the off-diagonal blocks).
struct Completion {
  MatrixXd m, n, x0, y0;  ///< p x p blocks
  MatrixXd q;             ///< n x p, orthonormal columns, Q N = Utilde - U M
  OrthogonalMatrix v0;    ///< the assembled 2p x 2p iterate
};

/// Validates and assembles a Completion from its blocks.
inline Completion make_completion(MatrixXd m, MatrixXd n, MatrixXd x0,
                                  MatrixXd y0, MatrixXd q) {
  const Index p = m.rows();
  require(m.cols() == p && n.rows() == p && n.cols() == p &&
              x0.rows() == p && x0.cols() == p && y0.rows() == p &&
              y0.cols() == p && q.cols() == p && q.rows() >= p,
          "make_completion: block dimension mismatch");
  MatrixXd qres = q.transpose() * q;
  qres.diagonal().array() -= 1.0;
  require(qres.norm() <= 1e-10 * std::sqrt(static_cast<double>(p)),
          "make_completion: Q columns not orthonormal");

  require((y0 - y0.transpose()).norm() <= 1e-10,
          "make_completion: Y0 not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (y0 + y0.transpose()),
                                             Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-10 &&
              es.eigenvalues().maxCoeff() <= 1.0 + 1e-10,
          "make_completion: Y0 eigenvalues outside [0,1]");
  require(std::abs(spectral_norm(n) - spectral_norm(x0)) <=
              1e-10 * std::max(1.0, spectral_norm(n)),
          "make_completion: ||N||_2 != ||X0||_2");

  MatrixXd v(2 * p, 2 * p);
  v.topLeftCorner(p, p) = m;
  v.topRightCorner(p, p) = x0;
  v.bottomLeftCorner(p, p) = n;
  v.bottomRightCorner(p, p) = y0;
  return Completion{std::move(m), std::move(n), std::move(x0), std::move(y0),
                    std::move(q), OrthogonalMatrix(std::move(v))};
}

/// Builds the starting data of the logarithm iteration for a pair (U, Ut):
/// M = U^T Ut, Q N = qr(Ut - U M), then an orthogonal completion of (M; N)
/// obtained from the QR of [(M; N) | G] with a fixed-seed random block G,
/// followed by the Procrustes step that replaces Y0 by the symmetric PSD
/// D Sigma D^T from its SVD (X0 is rotated accordingly). When
/// ||U - Ut||_2 < eps this yields ||I - M||_2 < eps, ||N||_2 = ||X0||_2 <
/// eps and ||Y0 - I||_2 < eps^2.
inline Completion build_completion(const StiefelPoint& u,
                                   const StiefelPoint& ut) {
  require(u.rows() == ut.rows() && u.cols() == ut.cols(),
          "build_completion: dimension mismatch");
  const Index p = u.cols();
  MatrixXd m = u.matrix().transpose() * ut.matrix();
  QrFactors qr = qr_economy(ut.matrix() - u.matrix() * m);

  // Orthogonal completion: QR of [(M;N) | G]. The first p columns are
  // already orthonormal, so the trailing p columns of the full Q complete
  // them; a rank-deficient draw G is re-randomized once.
  MatrixXd mn(2 * p, p);
  mn.topRows(p) = m;
  mn.bottomRows(p) = qr.r;
  MatrixXd comp;
  constexpr std::uint64_t kCompletionSeed = 0x5ca1ab1eu;
  for (int attempt = 0; attempt < 2; ++attempt) {
    UniformRng rng(mix_seed(kCompletionSeed, static_cast<std::uint64_t>(attempt)));
    MatrixXd basis(2 * p, 2 * p);
    basis.leftCols(p) = mn;
    basis.rightCols(p) = rng.signed_matrix(2 * p, p);
    QrFactors full = qr_economy(basis);
    bool ok = true;
    for (Index j = p; j < 2 * p; ++j)
      if (std::abs(full.r(j, j)) < 1e-10) ok = false;
    if (ok) {
      comp = full.q.rightCols(p);
      break;
    }
    if (attempt == 1)
      throw CompletionFailure("build_completion: rank-deficient completion");
  }

  // Procrustes: align Y0 with the identity, making it symmetric PSD.
  SvdFactors y0svd = svd(comp.bottomRows(p));
  comp = comp * (y0svd.v * y0svd.u.transpose());

  return make_completion(std::move(m), qr.r, comp.topRows(p),
                         comp.bottomRows(p), std::move(qr.q));
}

enum class LogNorm { Spectral, Frobenius };
enum class LogStatus { Converged, MaxIterExceeded, LogBranchFailure };

inline const char* to_string(LogStatus s) {
  switch (s) {
    case LogStatus::Converged: return "converged";
    case LogStatus::MaxIterExceeded: return "max_iter_exceeded";
    case LogStatus::LogBranchFailure: return "log_branch_failure";
  }
  return "unknown";
}

struct LogConfig {
  double tau = 1e-13;               ///< convergence threshold on ||C_k||
  long max_iter = 1000;             ///< maximum corrective updates
  LogNorm norm_kind = LogNorm::Spectral;  ///< norm in the stopping rule
  double angle_guard = 1e-8;        ///< forwarded to logm_orthogonal
  /// Drift threshold for re-orthonormalizing V_k; values above 1e-10 are
  /// clamped, since the iterates must stay within the orthogonality
  /// invariant of their type.
  double reorth_tol = 1e-10;
};

/// Per-run convergence record of the logarithm iteration.
///
/// `iterations` counts corrective updates V_k -> V_{k+1}; the block log is
/// evaluated once before any update, so on convergence conv_hist carries
/// iterations + 1 entries (one ||C_k|| per evaluation, in the configured
/// norm). The spectral histories are kept regardless of the stopping norm
/// for convergence diagnostics.
struct LogReport {
  long iterations = 0;
  std::vector<double> conv_hist;
  double norm_logV0 = std::numeric_limits<double>::quiet_NaN();
  LogStatus status = LogStatus::MaxIterExceeded;
  std::vector<double> c_spectral_hist;     ///< ||C_k||_2 per evaluation
  std::vector<double> logv_spectral_hist;  ///< ||log_m(V_k)||_2 per evaluation
};

struct LogResult {
  std::optional<StiefelTangent> tangent;  ///< present iff status == Converged
  LogReport report;
};

/// Writes a convergence history as CSV rows (k, norm_C).
inline void write_history_csv(std::ostream& out, const LogReport& report) {
  out << "k,norm_C\n";
  for (size_t k = 0; k < report.conv_hist.size(); ++k)
    out << k << ',' << io::fmt_g17(report.conv_hist[k]) << '\n';
}

/// Runs the logarithm iteration from an explicitly supplied completion.
///
/// This is the generic engine behind stiefel_log; exposing it separately
/// allows starting from a hand-picked V0 (the orthogonal completion is not
/// unique, and a poor choice can place an eigenvalue at -1 even for nearby
/// input points, which surfaces as LogBranchFailure).
inline LogResult stiefel_log_from_completion(const StiefelPoint& u,
                                             const StiefelPoint& ut,
                                             const Completion& comp,
                                             const LogConfig& cfg = {}) {
  require(u.rows() == ut.rows() && u.cols() == ut.cols(),
          "stiefel_log: dimension mismatch");
  require(cfg.tau > 0.0, "stiefel_log: tau must be positive");
  require(cfg.max_iter >= 1, "stiefel_log: max_iter must be >= 1");
  const Index p = u.cols();
  require(comp.m.rows() == p && comp.q.rows() == u.rows(),
          "stiefel_log: completion does not match the input pair");

  MatrixXd v = comp.v0.matrix();
  const double reorth_tol = std::min(cfg.reorth_tol, 1e-10);
  LogReport rep;
  for (long k = 0;; ++k) {
    std::optional<SkewSymmetricMatrix> logv;
    try {
      logv = logm_orthogonal(OrthogonalMatrix(v), cfg.angle_guard);
    } catch (const EigenvalueNearMinusOne& e) {
      // The principal branch broke down; report max|phi| (~pi) as the
      // starting log norm when no evaluation succeeded before.
      if (k == 0) rep.norm_logV0 = e.max_angle();
      rep.status = LogStatus::LogBranchFailure;
      rep.iterations = k;
      return {std::nullopt, std::move(rep)};
    }

    const MatrixXd& l = logv->matrix();
    rep.logv_spectral_hist.push_back(spectral_norm(l));
    if (k == 0) rep.norm_logV0 = rep.logv_spectral_hist.front();

    MatrixXd c = l.bottomRightCorner(p, p);
    const double c_spec = spectral_norm(c);
    rep.c_spectral_hist.push_back(c_spec);
    const double c_stop = cfg.norm_kind == LogNorm::Spectral ? c_spec : c.norm();
    rep.conv_hist.push_back(c_stop);

    if (c_stop <= cfg.tau) {
      rep.status = LogStatus::Converged;
      rep.iterations = k;
      MatrixXd delta = u.matrix() * l.topLeftCorner(p, p) +
                       comp.q * l.bottomLeftCorner(p, p);
      return {StiefelTangent(u, std::move(delta)), std::move(rep)};
    }
    if (k >= cfg.max_iter) {
      rep.status = LogStatus::MaxIterExceeded;
      rep.iterations = k;
      return {std::nullopt, std::move(rep)};
    }

    OrthogonalMatrix phi = expm_skew(SkewSymmetricMatrix(-c));
    v.rightCols(p) *= phi.matrix();

    // Repeated right-multiplications preserve orthogonality only up to
    // roundoff; restore it once the drift becomes visible.
    MatrixXd drift = v.transpose() * v;
    drift.diagonal().array() -= 1.0;
    if (drift.norm() > reorth_tol) v = qr_economy(v).q;
  }
}

/// Riemannian logarithm on St(n,p): finds the tangent delta with
/// Exp_U(delta) = Ut, together with the convergence record. Failures are
/// reported through LogReport::status (LogBranchFailure when the principal
/// log hits an eigenvalue near -1, MaxIterExceeded otherwise); no exception
/// escapes for these two conditions.
inline LogResult stiefel_log(const StiefelPoint& u, const StiefelPoint& ut,
                             const LogConfig& cfg = {}) {
  return stiefel_log_from_completion(u, ut, build_completion(u, ut), cfg);
}

/// The logarithm did not converge, so no distance is available.
struct LogFailure : std::runtime_error {
  explicit LogFailure(LogStatus s)
      : std::runtime_error(std::string("stiefel_log failed: ") + to_string(s)),
        status(s) {}
  LogStatus status;
};

/// Riemannian (geodesic) distance ||Log_U(Ut)||_U. The exponential is
/// radially isometric, so this equals the canonical norm of the connecting
/// velocity. Throws LogFailure when the logarithm does not converge.
inline double distance(const StiefelPoint& u, const StiefelPoint& ut,
                       const LogConfig& cfg = {}) {
  LogResult res = stiefel_log(u, ut, cfg);
  if (res.report.status != LogStatus::Converged)
    throw LogFailure(res.report.status);
  return canonical_norm(u, *res.tangent);
}

// ---------------------------------------------------------------------------
// Seeded random data. U comes from the QR of a uniform(0,1) matrix; tangents
// are Delta = U (G - G^T) + (I - U U^T) T with uniform(0,1) G, T, rescaled to
// prescribed canonical norm. Equal seeds give bitwise-identical output.
// ---------------------------------------------------------------------------

inline StiefelPoint random_stiefel_from(UniformRng& rng, Index n, Index p) {
  require(n >= p && p > 0, "random_stiefel: need n >= p >= 1");
  return StiefelPoint(qr_economy(rng.matrix(n, p)).q);
}

inline StiefelTangent random_tangent_from(UniformRng& rng,
                                          const StiefelPoint& u, double dist) {
  require(dist > 0.0, "random_tangent: dist must be positive");
  const Index n = u.rows(), p = u.cols();
  MatrixXd g = rng.matrix(p, p);
  MatrixXd a = g - g.transpose().eval();
  MatrixXd t = rng.matrix(n, p);
  MatrixXd delta = u.matrix() * a + t - u.matrix() * (u.matrix().transpose() * t);
  const double nrm =
      std::sqrt(delta.squaredNorm() - 0.5 * a.squaredNorm());
  require(nrm > 0.0, "random_tangent: degenerate draw");
  return StiefelTangent(u, (dist / nrm) * delta);
}

inline StiefelPoint random_stiefel(Index n, Index p, std::uint64_t seed) {
  UniformRng rng(seed);
  return random_stiefel_from(rng, n, p);
}

inline StiefelTangent random_tangent(const StiefelPoint& u, double dist,
                                     std::uint64_t seed) {
  UniformRng rng(seed);
  return random_tangent_from(rng, u, dist);
}

struct RandomPair {
  StiefelPoint u;
  StiefelPoint ut;
  StiefelTangent delta;  ///< based at u, canonical norm = requested dist
};

/// Draws U, a tangent of canonical norm `dist`, and Ut = Exp_U(delta), so
/// that the pair lies at exact Riemannian distance `dist`.
inline RandomPair random_pair(Index n, Index p, double dist,
                              std::uint64_t seed) {
  UniformRng rng(seed);
  StiefelPoint u = random_stiefel_from(rng, n, p);
  StiefelTangent delta = random_tangent_from(rng, u, dist);
  StiefelPoint ut = stiefel_exp(u, delta).point;
  return {std::move(u), std::move(ut), std::move(delta)};
}

// ---------------------------------------------------------------------------
// Runtime convergence diagnostics derived from a LogReport.
// ---------------------------------------------------------------------------

/// Outcome of auditing one run against the linear-convergence guarantees:
/// when every iterate satisfies ||log_m(V_k)||_2 < (sqrt(5)-1)/2 the block
/// residual must at least halve per step, and when additionally
/// ||U - Ut||_2 < 0.0912 the iteration count is bounded by
/// ceil((log||C_0|| - log tau)/log 2) - 1.
struct ConvergenceAudit {
  bool halving_applicable = false;
  bool halving_holds = true;
  int halving_pairs = 0;
  bool ceiling_applicable = false;
  bool ceiling_holds = true;
  long ceiling = -1;
};

inline ConvergenceAudit audit_convergence(const LogReport& rep, double tau,
                                          double norm_u_diff) {
  ConvergenceAudit audit;
  const double delta0 = contraction_norm_limit();
  bool all_below = !rep.logv_spectral_hist.empty();
  for (double s : rep.logv_spectral_hist)
    if (!(s < delta0)) all_below = false;

  if (all_below && rep.c_spectral_hist.size() >= 2) {
    audit.halving_applicable = true;
    for (size_t k = 0; k + 1 < rep.c_spectral_hist.size(); ++k) {
      ++audit.halving_pairs;
      if (!(rep.c_spectral_hist[k + 1] < 0.5 * rep.c_spectral_hist[k]))
        audit.halving_holds = false;
    }
  }

  if (rep.status == LogStatus::Converged && norm_u_diff < 0.0912 &&
      !rep.c_spectral_hist.empty() && rep.c_spectral_hist.front() > tau) {
    audit.ceiling_applicable = true;
    audit.ceiling = static_cast<long>(std::ceil(
                        (std::log(rep.c_spectral_hist.front()) - std::log(tau)) /
                        std::log(2.0))) -
                    1;
    audit.ceiling_holds = rep.iterations <= audit.ceiling;
  }
  return audit;
}

}  // namespace stgeo
