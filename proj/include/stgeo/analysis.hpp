#pragma once

// Numerical verification of the convergence mathematics behind the
// logarithm iteration: explicit low-order terms of the Goldberg/Dynkin
// expansion of log(exp X exp Y), the improved binomial inequality that
// sharpens the series majorant, the contraction factor
// alpha(s) = s^2/6 + s^3/12 + s^4/(1-s), and the epsilon-threshold chain
// that certifies the contraction regime from ||U - Ut||_2 alone.
//
// The reference values log(exp X exp Y) for general (non-skew) inputs are
// computed with the general-purpose Schur-based matrix functions from
// Eigen's MatrixFunctions module; this is the only place such a general
// path is used, the geodesic kernel itself stays structure-preserving.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "stgeo/matfunc.hpp"
#include "stgeo/matrix_io.hpp"
#include "stgeo/rng.hpp"

namespace stgeo::analysis {

using BigInt = boost::multiprecision::cpp_int;

// Compact scalar label for check names ("0.1", "0.30000000000000004" never
// shows up because the inputs are short literals).
inline std::string short_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

/// (sqrt(5) - 1)/2.
inline double delta0() { return 0.5 * (std::sqrt(5.0) - 1.0); }

/// General matrix exponential (Schur based; inputs need not be skew).
inline MatrixXd expm_general(const MatrixXd& a) {
  require(a.rows() == a.cols(), "expm_general: not square");
  require_finite(a, "expm_general");
  return a.exp();
}

/// General principal matrix logarithm (Schur based; the spectrum must stay
/// off the closed negative real axis).
inline MatrixXd logm_general(const MatrixXd& a) {
  require(a.rows() == a.cols(), "logm_general: not square");
  require_finite(a, "logm_general");
  return a.log();
}

inline MatrixXd commutator(const MatrixXd& x, const MatrixXd& y) {
  return x * y - y * x;
}

/// Explicit homogeneous terms z_k(X,Y) of log(exp X exp Y) for k = 2, 3, 4:
///   z_2 = 1/2 (XY - YX)
///   z_3 = 1/12 (X^2 Y - 2 XYX + X Y^2 + Y X^2 - 2 YXY + Y^2 X)
///   z_4 = 1/24 (X^2 Y^2 - 2 XYXY + 2 YXYX - Y^2 X^2)
inline MatrixXd goldberg_z(int k, const MatrixXd& x, const MatrixXd& y) {
  require(x.rows() == x.cols() && y.rows() == y.cols() &&
              x.rows() == y.rows(),
          "goldberg_z: need square matrices of equal dimension");
  switch (k) {
    case 2:
      return 0.5 * (x * y - y * x);
    case 3:
      return (x * x * y - 2.0 * x * y * x + x * y * y + y * x * x -
              2.0 * y * x * y + y * y * x) /
             12.0;
    case 4:
      return (x * x * y * y - 2.0 * x * y * x * y + 2.0 * y * x * y * x -
              y * y * x * x) /
             24.0;
    default:
      throw InvariantViolation("goldberg_z: explicit term only for k = 2,3,4");
  }
}

/// Coefficient c_k with ||z_k(X,Y)|| <= c_k mu^k for ||X||,||Y|| <= mu < 1.
/// k = 5, 6 come from word counts (30 words with max coefficient 1/30,
/// resp. 28 words with max coefficient 1/60); a sharper 176/720 is known
/// for k = 5 but the conservative 1 is kept.
inline double goldberg_bound_coeff(int k) {
  switch (k) {
    case 2: return 1.0;
    case 3: return 8.0 / 12.0;
    case 4: return 6.0 / 24.0;
    case 5: return 1.0;
    case 6: return 28.0 / 60.0;
    default:
      throw InvariantViolation("goldberg_bound_coeff: k must be in [2,6]");
  }
}

/// One term of the series: explicit value for orders 2..4, norm-bound
/// coefficient for orders 2..6.
struct GoldbergTerm {
  int order;
  std::optional<MatrixXd> value;
  double bound_coeff;
};

inline GoldbergTerm goldberg_term(int k, const MatrixXd& x,
                                  const MatrixXd& y) {
  GoldbergTerm t{k, std::nullopt, goldberg_bound_coeff(k)};
  if (k <= 4) t.value = goldberg_z(k, x, y);
  return t;
}

/// Dynkin expansion of log(exp X exp Y) truncated after fourth order:
/// X + Y + 1/2 [X,Y] + 1/12 ([X,[X,Y]] + [Y,[Y,X]]) - 1/24 [Y,[X,[X,Y]]].
inline MatrixXd bch_truncated(const MatrixXd& x, const MatrixXd& y) {
  require(x.rows() == x.cols() && y.rows() == y.cols() &&
              x.rows() == y.rows(),
          "bch_truncated: need square matrices of equal dimension");
  MatrixXd xy = commutator(x, y);
  return x + y + 0.5 * xy +
         (commutator(x, xy) + commutator(y, commutator(y, x))) / 12.0 -
         commutator(y, commutator(x, xy)) / 24.0;
}

/// Exact evaluation of m * binom(m-1, ceil((m-1)/2)) > 2^m (holds for all
/// m >= 7; this is the factor-2 sharpening of the classical estimate that
/// drives the series majorant).
struct BinomialCheck {
  int m;
  BigInt lhs;
  BigInt rhs;
  bool holds;
};

inline BinomialCheck binomial_inequality(int m) {
  require(m >= 2, "binomial_inequality: m must be >= 2");
  const int n = m - 1;
  const int k = (n + 1) / 2;  // ceil((m-1)/2)
  BigInt binom = 1;
  for (int i = 1; i <= k; ++i) {
    binom *= n - k + i;
    binom /= i;
  }
  BigInt lhs = BigInt(m) * binom;
  BigInt rhs = BigInt(1) << m;
  return {m, lhs, rhs, lhs > rhs};
}

/// Contraction factor alpha(s) = s^2/6 + s^3/12 + s^4/(1-s) bounding
/// ||C_{k+1}|| / ||C_k|| when ||log_m(V_k)||_2 = s. Below 1/2 for all
/// s < (sqrt(5)-1)/2 and below 1 up to s ~ 0.7111.
inline double contraction_alpha(double s) {
  require(s >= 0.0 && s < 1.0, "contraction_alpha: need 0 <= s < 1");
  const double s2 = s * s;
  return s2 / 6.0 + s2 * s / 12.0 + s2 * s2 / (1.0 - s);
}

/// Bound of the principal log of an orthogonal V with ||V - I||_2 < r < 1:
/// ||log_m(V)||_2 < r sqrt(1 - r^2/4) / (1 - r^2/2).
inline double logm_bound(double r) {
  require(r > 0.0 && r < 1.0, "logm_bound: need 0 < r < 1");
  const double r2 = r * r;
  return r * std::sqrt(1.0 - 0.25 * r2) / (1.0 - 0.5 * r2);
}

/// Evaluated threshold chain for a starting gap ||U - Ut||_2 < eps.
///
/// eps_tilde bounds ||log_m(V_0)||_2, eps_hat bounds ||V_k - I||_2 for all
/// k, and s bounds ||log_m(V_k)||_2. The iteration is certified to contract
/// with factor alpha < 1/2 when s stays below delta0 = (sqrt(5)-1)/2,
/// equivalently when eps_hat < eps_hat0. That flag turns true for all
/// eps < 0.0912.
struct BoundsReport {
  double eps = 0.0;
  double eps_tilde = 0.0;   ///< 2 eps sqrt(1-eps^2)/(1-2 eps^2)
  double eps_hat = 0.0;     ///< (e^{2 eps_tilde} - 1) + eps + eps^2
  double eps_hat0 = 0.0;    ///< sqrt(2) (1 - 1/sqrt(1+delta0^2))^{1/2}
  double delta0 = 0.0;      ///< (sqrt(5)-1)/2
  double s = 0.0;           ///< iterate log-norm bound logm_bound(eps_hat)
  double alpha = 0.0;       ///< contraction_alpha(s)
  struct Flags {
    bool norm_bound_below_delta0 = false;  ///< s < delta0 (the decisive one)
    bool alpha_below_half = false;
    bool eps_tilde_below_delta0 = false;
  } pass_flags;
};

inline BoundsReport epsilon_chain(double eps) {
  require(eps > 0.0 && eps < 1.0 / std::sqrt(2.0),
          "epsilon_chain: need 0 < eps < 1/sqrt(2)");
  constexpr double inf = std::numeric_limits<double>::infinity();
  BoundsReport r;
  r.eps = eps;
  r.delta0 = delta0();
  r.eps_tilde =
      2.0 * eps * std::sqrt(1.0 - eps * eps) / (1.0 - 2.0 * eps * eps);
  r.eps_hat = std::expm1(2.0 * r.eps_tilde) + eps + eps * eps;
  r.eps_hat0 =
      std::sqrt(2.0) *
      std::sqrt(1.0 - 1.0 / std::sqrt(1.0 + r.delta0 * r.delta0));
  r.s = r.eps_hat < 1.0 ? logm_bound(r.eps_hat) : inf;
  r.alpha = r.s < 1.0 ? contraction_alpha(r.s) : inf;
  r.pass_flags.norm_bound_below_delta0 = r.eps_hat < r.eps_hat0;
  r.pass_flags.alpha_below_half = r.alpha < 0.5;
  r.pass_flags.eps_tilde_below_delta0 = r.eps_tilde < r.delta0;
  return r;
}

inline void write_bounds_csv_header(std::ostream& out) {
  out << "eps,eps_tilde,eps_hat,eps_hat0,delta0,s,alpha,"
         "norm_bound_below_delta0,alpha_below_half,eps_tilde_below_delta0\n";
}

inline void write_bounds_csv_row(std::ostream& out, const BoundsReport& r) {
  out << io::fmt_g17(r.eps) << ',' << io::fmt_g17(r.eps_tilde) << ','
      << io::fmt_g17(r.eps_hat) << ',' << io::fmt_g17(r.eps_hat0) << ','
      << io::fmt_g17(r.delta0) << ',' << io::fmt_g17(r.s) << ','
      << io::fmt_g17(r.alpha) << ',' << (r.pass_flags.norm_bound_below_delta0 ? 1 : 0)
      << ',' << (r.pass_flags.alpha_below_half ? 1 : 0) << ','
      << (r.pass_flags.eps_tilde_below_delta0 ? 1 : 0) << '\n';
}

/// Human-readable threshold-chain table for a set of gap values.
inline void print_bounds_table(std::ostream& out,
                               const std::vector<BoundsReport>& reports) {
  char line[160];
  std::snprintf(line, sizeof(line), "%10s %12s %12s %12s %12s %10s\n", "eps",
                "eps_tilde", "eps_hat", "s", "alpha", "certified");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%10.5f %12.6f %12.6f %12.6f %12.6f %10s\n",
                  r.eps, r.eps_tilde, r.eps_hat, r.s, r.alpha,
                  r.pass_flags.norm_bound_below_delta0 ? "yes" : "no");
    out << line;
  }
}

// ---------------------------------------------------------------------------
// Property suites. Each check draws its own generator from (seed, index), so
// the outcome is independent of evaluation order.
// ---------------------------------------------------------------------------

struct SuiteCheck {
  std::string name;
  bool pass = false;
  double observed = 0.0;  ///< worst observed value
  double bound = 0.0;     ///< the limit it is compared against
};

namespace detail {

inline MatrixXd random_with_norm(UniformRng& rng, Index p, double nrm) {
  MatrixXd g = rng.signed_matrix(p, p);
  return g * (nrm / spectral_norm(g));
}

inline MatrixXd random_skew_with_norm(UniformRng& rng, Index p, double nrm) {
  MatrixXd g = rng.signed_matrix(p, p);
  MatrixXd s = g - g.transpose().eval();
  return s * (nrm / spectral_norm(s));
}

}  // namespace detail

/// Per-term bounds ||z_k|| <= c_k mu^k and the full majorant
/// ||log(exp X exp Y)|| <= ||X|| + ||Y|| + mu^2/(1-mu), sampled over random
/// pairs with ||X||_2 = ||Y||_2 = mu.
inline std::vector<SuiteCheck> goldberg_suite(std::uint64_t seed, int samples,
                                              Index p = 6) {
  std::vector<SuiteCheck> checks;
  const double mus[] = {0.1, 0.3, 0.5};
  for (double mu : mus) {
    double worst_term[3] = {0.0, 0.0, 0.0};
    double worst_major = 0.0;
    double major_bound = 0.0;
    for (int i = 0; i < samples; ++i) {
      UniformRng rng = UniformRng::for_stream(seed, static_cast<std::uint64_t>(
                                                        i * 8 + int(mu * 10)));
      MatrixXd x = detail::random_with_norm(rng, p, mu);
      MatrixXd y = detail::random_with_norm(rng, p, mu);
      for (int k = 2; k <= 4; ++k)
        worst_term[k - 2] =
            std::max(worst_term[k - 2], spectral_norm(goldberg_z(k, x, y)));
      MatrixXd z = logm_general(expm_general(x) * expm_general(y));
      worst_major = std::max(worst_major, spectral_norm(z));
      major_bound = spectral_norm(x) + spectral_norm(y) + mu * mu / (1.0 - mu);
    }
    for (int k = 2; k <= 4; ++k) {
      const double bound = goldberg_bound_coeff(k) * std::pow(mu, k);
      checks.push_back({"goldberg_z" + std::to_string(k) +
                            "_bound_mu=" + short_label(mu),
                        worst_term[k - 2] <= bound + 1e-12, worst_term[k - 2],
                        bound});
    }
    checks.push_back({"goldberg_majorant_mu=" + short_label(mu),
                      worst_major <= major_bound + 1e-10, worst_major,
                      major_bound});
  }
  return checks;
}

/// ||exp(C) - I||_2 < ||C||_2 for skew C with ||C||_2 < pi.
inline SuiteCheck log_exp_bound_suite(std::uint64_t seed, int samples,
                                      Index p = 6) {
  constexpr double pi = 3.14159265358979323846;
  double worst_margin = std::numeric_limits<double>::infinity();
  bool pass = true;
  for (int i = 0; i < samples; ++i) {
    UniformRng rng = UniformRng::for_stream(seed ^ 0xb1u, i);
    const double nrm = 1e-2 + (pi - 2e-2) * rng.next();
    MatrixXd c = detail::random_skew_with_norm(rng, p, nrm);
    MatrixXd e = expm_skew(SkewSymmetricMatrix(c)).matrix();
    e.diagonal().array() -= 1.0;
    const double lhs = spectral_norm(e);
    worst_margin = std::min(worst_margin, nrm - lhs);
    if (!(lhs < nrm)) pass = false;
  }
  return {"expm_minus_identity_below_norm", pass, worst_margin, 0.0};
}

/// ||log_m(V)||_2 < logm_bound(r) for orthogonal V with r = ||V - I||_2 < 1.
inline SuiteCheck logm_bound_suite(std::uint64_t seed, int samples,
                                   Index p = 6) {
  double worst_margin = std::numeric_limits<double>::infinity();
  bool pass = true;
  for (int i = 0; i < samples; ++i) {
    UniformRng rng = UniformRng::for_stream(seed ^ 0xb2u, i);
    const double nrm = 1e-2 + 1.02 * rng.next();
    MatrixXd s = detail::random_skew_with_norm(rng, p, nrm);
    MatrixXd v = expm_skew(SkewSymmetricMatrix(s)).matrix();
    MatrixXd e = v - MatrixXd::Identity(p, p);
    const double r = spectral_norm(e);
    if (r >= 1.0) continue;
    const double lhs =
        spectral_norm(logm_orthogonal(OrthogonalMatrix(v)).matrix());
    const double bound = logm_bound(r);
    worst_margin = std::min(worst_margin, bound - lhs);
    if (!(lhs < bound + 1e-12)) pass = false;
  }
  return {"logm_norm_below_geometric_bound", pass, worst_margin, 0.0};
}

/// Exact binomial inequality over [7, mmax], plus its failure below 7.
inline std::vector<SuiteCheck> binomial_suite(int mmax = 200) {
  std::vector<SuiteCheck> checks;
  bool all = true;
  for (int m = 7; m <= mmax; ++m)
    if (!binomial_inequality(m).holds) all = false;
  checks.push_back({"binomial_holds_m_7_" + std::to_string(mmax), all,
                    all ? 1.0 : 0.0, 1.0});
  bool none = true;
  for (int m = 2; m <= 6; ++m)
    if (binomial_inequality(m).holds) none = false;
  checks.push_back({"binomial_fails_m_2_6", none, none ? 1.0 : 0.0, 1.0});
  return checks;
}

/// alpha values: 0.4653 at delta0, below 1/2 left of delta0 on a 1e-4 grid,
/// and the alpha < 1 boundary bracketed at s ~ 0.7111.
inline std::vector<SuiteCheck> alpha_suite() {
  std::vector<SuiteCheck> checks;
  const double a0 = contraction_alpha(delta0());
  checks.push_back(
      {"alpha_at_delta0", std::abs(a0 - 0.4653) <= 5e-5, a0, 0.4653});
  bool below_half = true;
  double worst = 0.0;
  for (double s = 0.0; s < delta0(); s += 1e-4) {
    const double a = contraction_alpha(s);
    worst = std::max(worst, a);
    if (!(a < 0.5)) below_half = false;
  }
  checks.push_back({"alpha_below_half_left_of_delta0", below_half, worst, 0.5});
  const double lo = contraction_alpha(0.7110), hi = contraction_alpha(0.7112);
  checks.push_back({"alpha_unit_boundary_bracket", lo < 1.0 && hi >= 1.0,
                    lo, hi});
  return checks;
}

/// Dynkin truncation error against the series tail mu^5/(1-mu).
inline std::vector<SuiteCheck> bch_tail_suite(std::uint64_t seed, int samples,
                                              Index p = 6) {
  std::vector<SuiteCheck> checks;
  const double mus[] = {0.1, 0.3};
  for (double mu : mus) {
    double worst = 0.0;
    const double bound = std::pow(mu, 5) / (1.0 - mu);
    bool pass = true;
    for (int i = 0; i < samples; ++i) {
      UniformRng rng = UniformRng::for_stream(seed ^ 0xb3u,
                                              static_cast<std::uint64_t>(
                                                  i * 2 + int(mu * 10)));
      MatrixXd x = detail::random_with_norm(rng, p, mu);
      MatrixXd y = detail::random_with_norm(rng, p, mu);
      MatrixXd z = logm_general(expm_general(x) * expm_general(y));
      const double err = spectral_norm(bch_truncated(x, y) - z);
      worst = std::max(worst, err);
      if (!(err <= bound + 1e-12)) pass = false;
    }
    checks.push_back({"bch_tail_mu=" + short_label(mu), pass, worst, bound});
  }
  return checks;
}

/// Threshold chain: certified regime at eps = 0.09 and 0.0912, broken at
/// eps = 0.2, with the flag transition just above 0.0912.
inline std::vector<SuiteCheck> epsilon_suite() {
  std::vector<SuiteCheck> checks;
  const BoundsReport a = epsilon_chain(0.09);
  const BoundsReport b = epsilon_chain(0.0912);
  const BoundsReport c = epsilon_chain(0.2);
  const BoundsReport d = epsilon_chain(0.092);
  checks.push_back({"epsilon_chain_certifies_0.09",
                    a.pass_flags.norm_bound_below_delta0, a.s, a.delta0});
  checks.push_back({"epsilon_chain_certifies_0.0912",
                    b.pass_flags.norm_bound_below_delta0, b.s, b.delta0});
  checks.push_back({"epsilon_chain_rejects_0.2",
                    !c.pass_flags.norm_bound_below_delta0, c.eps_hat,
                    c.eps_hat0});
  checks.push_back({"epsilon_chain_transition_by_0.092",
                    !d.pass_flags.norm_bound_below_delta0, d.eps_hat,
                    d.eps_hat0});
  return checks;
}

/// All analysis property suites in one batch.
inline std::vector<SuiteCheck> run_all_suites(std::uint64_t seed = 20250101,
                                              int samples = 1000) {
  std::vector<SuiteCheck> checks;
  auto append = [&checks](std::vector<SuiteCheck> more) {
    for (auto& c : more) checks.push_back(std::move(c));
  };
  append(binomial_suite());
  append(alpha_suite());
  append(epsilon_suite());
  append(goldberg_suite(seed, samples));
  append(bch_tail_suite(seed, samples));
  checks.push_back(log_exp_bound_suite(seed, samples));
  checks.push_back(logm_bound_suite(seed, samples));
  return checks;
}

}  // namespace stgeo::analysis
