#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "stgeo/analysis.hpp"

using namespace stgeo;
using namespace stgeo::analysis;

TEST_CASE("goldberg_z explicit terms") {
  UniformRng rng(1);
  MatrixXd x = rng.signed_matrix(5, 5);

  SECTION("equal inputs kill the commutator term") {
    REQUIRE(goldberg_z(2, x, x).cwiseAbs().maxCoeff() <= 1e-14);
  }

  SECTION("commuting inputs kill all terms") {
    MatrixXd d1 = Eigen::Vector3d(0.1, -0.4, 0.2).asDiagonal();
    MatrixXd d2 = Eigen::Vector3d(0.3, 0.05, -0.2).asDiagonal();
    for (int k : {2, 3, 4})
      REQUIRE(goldberg_z(k, d1, d2).cwiseAbs().maxCoeff() <= 1e-15);
  }

  SECTION("per-term norm bounds at mu = 0.3") {
    const double mu = 0.3;
    for (int i = 0; i < 100; ++i) {
      UniformRng s = UniformRng::for_stream(2, i);
      MatrixXd a = s.signed_matrix(4, 4);
      a *= mu / spectral_norm(a);
      MatrixXd b = s.signed_matrix(4, 4);
      b *= mu / spectral_norm(b);
      for (int k : {2, 3, 4})
        REQUIRE(spectral_norm(goldberg_z(k, a, b)) <=
                goldberg_bound_coeff(k) * std::pow(mu, k) + 1e-12);
    }
  }

  SECTION("term metadata") {
    GoldbergTerm t5 = goldberg_term(5, x, x);
    REQUIRE(!t5.value.has_value());
    REQUIRE(t5.bound_coeff == 1.0);
    GoldbergTerm t3 = goldberg_term(3, x, x);
    REQUIRE(t3.value.has_value());
    REQUIRE(goldberg_bound_coeff(6) == Catch::Approx(28.0 / 60.0));
    REQUIRE_THROWS_AS(goldberg_z(5, x, x), InvariantViolation);
    REQUIRE_THROWS_AS(goldberg_bound_coeff(7), InvariantViolation);
  }
}

TEST_CASE("bch_truncated") {
  SECTION("commuting inputs reduce to the sum") {
    MatrixXd d1 = Eigen::Vector3d(0.2, -0.1, 0.4).asDiagonal();
    MatrixXd d2 = Eigen::Vector3d(-0.3, 0.25, 0.1).asDiagonal();
    REQUIRE((bch_truncated(d1, d2) - (d1 + d2)).cwiseAbs().maxCoeff() <=
            1e-15);
  }

  SECTION("truncation error is bounded by the series tail") {
    for (double mu : {0.1, 0.3}) {
      const double tail = std::pow(mu, 5) / (1.0 - mu);
      for (int i = 0; i < 50; ++i) {
        UniformRng s = UniformRng::for_stream(3, i + int(mu * 100));
        MatrixXd a = s.signed_matrix(5, 5);
        a *= mu / spectral_norm(a);
        MatrixXd b = s.signed_matrix(5, 5);
        b *= mu / spectral_norm(b);
        MatrixXd z = logm_general(expm_general(a) * expm_general(b));
        REQUIRE(spectral_norm(bch_truncated(a, b) - z) <= tail + 1e-12);
      }
    }
  }

  SECTION("block structure: the corrected lower block loses orders 1 and 2") {
    // For L_V = [[A, -B^T], [B, C]] and L_W = diag(0, -C) the lower-right
    // block of L_V + L_W + 1/2 [L_V, L_W] vanishes identically.
    UniformRng rng(4);
    const Index p = 3;
    MatrixXd ga = rng.signed_matrix(p, p), gc = rng.signed_matrix(p, p);
    MatrixXd a = 0.1 * (ga - ga.transpose().eval());
    MatrixXd c = 0.1 * (gc - gc.transpose().eval());
    MatrixXd b = 0.2 * rng.signed_matrix(p, p);
    MatrixXd lv = MatrixXd::Zero(2 * p, 2 * p), lw = MatrixXd::Zero(2 * p, 2 * p);
    lv.topLeftCorner(p, p) = a;
    lv.topRightCorner(p, p) = -b.transpose();
    lv.bottomLeftCorner(p, p) = b;
    lv.bottomRightCorner(p, p) = c;
    lw.bottomRightCorner(p, p) = -c;
    MatrixXd low_order = lv + lw + 0.5 * commutator(lv, lw);
    REQUIRE(low_order.bottomRightCorner(p, p).cwiseAbs().maxCoeff() <= 1e-15);
    // while the full fourth-order truncation leaves a third-order residue
    MatrixXd full = bch_truncated(lv, lw);
    REQUIRE(full.bottomRightCorner(p, p).cwiseAbs().maxCoeff() > 1e-8);
  }
}

TEST_CASE("binomial_inequality") {
  BinomialCheck c7 = binomial_inequality(7);
  REQUIRE(c7.lhs == 140);
  REQUIRE(c7.rhs == 128);
  REQUIRE(c7.holds);

  BinomialCheck c8 = binomial_inequality(8);
  REQUIRE(c8.lhs == 280);
  REQUIRE(c8.rhs == 256);
  REQUIRE(c8.holds);

  BinomialCheck c6 = binomial_inequality(6);
  REQUIRE(c6.lhs == 60);
  REQUIRE(c6.rhs == 64);
  REQUIRE(!c6.holds);

  for (int m = 2; m <= 6; ++m) REQUIRE(!binomial_inequality(m).holds);
  for (int m = 7; m <= 200; ++m) REQUIRE(binomial_inequality(m).holds);
  REQUIRE_THROWS_AS(binomial_inequality(1), InvariantViolation);
}

TEST_CASE("contraction_alpha") {
  REQUIRE(contraction_alpha(0.0) == 0.0);
  REQUIRE(contraction_alpha(delta0()) == Catch::Approx(0.4653).margin(5e-5));
  REQUIRE(contraction_alpha(0.7110) < 1.0);
  REQUIRE(contraction_alpha(0.7112) >= 1.0);
  for (double s = 0.0; s < delta0(); s += 1e-4)
    REQUIRE(contraction_alpha(s) < 0.5);
  REQUIRE_THROWS_AS(contraction_alpha(1.0), InvariantViolation);
  REQUIRE_THROWS_AS(contraction_alpha(-0.1), InvariantViolation);
}

TEST_CASE("logm_bound") {
  SECTION("small-r limit approaches r") {
    const double r = 1e-4;
    REQUIRE(logm_bound(r) / r == Catch::Approx(1.0).margin(1e-7));
  }

  SECTION("value at one half") {
    REQUIRE(logm_bound(0.5) ==
            Catch::Approx(0.5 * std::sqrt(0.9375) / 0.875).margin(1e-15));
    REQUIRE(logm_bound(0.5) == Catch::Approx(0.5533).margin(5e-5));
  }

  SECTION("monotone increasing") {
    double prev = 0.0;
    for (double r = 1e-3; r < 1.0; r += 1e-3) {
      const double b = logm_bound(r);
      REQUIRE(b > prev);
      prev = b;
    }
  }

  SECTION("domain") {
    REQUIRE_THROWS_AS(logm_bound(0.0), InvariantViolation);
    REQUIRE_THROWS_AS(logm_bound(1.0), InvariantViolation);
  }
}

TEST_CASE("epsilon_chain") {
  SECTION("certified at 0.09") {
    BoundsReport r = epsilon_chain(0.09);
    REQUIRE(r.pass_flags.norm_bound_below_delta0);
    REQUIRE(r.pass_flags.alpha_below_half);
    REQUIRE(r.s < r.delta0);
  }

  SECTION("broken at 0.2") {
    BoundsReport r = epsilon_chain(0.2);
    REQUIRE(!r.pass_flags.norm_bound_below_delta0);
  }

  SECTION("vanishing eps") {
    BoundsReport r = epsilon_chain(1e-8);
    REQUIRE(r.eps_tilde == Catch::Approx(2e-8).epsilon(1e-6));
    REQUIRE(r.eps_hat <= 6e-8);
    REQUIRE(r.pass_flags.norm_bound_below_delta0);
  }

  SECTION("threshold constants") {
    BoundsReport r = epsilon_chain(0.0912);
    REQUIRE(r.delta0 == Catch::Approx(0.6180339887498949).margin(1e-15));
    REQUIRE(r.pass_flags.norm_bound_below_delta0);  // still certified here
    REQUIRE(!epsilon_chain(0.092).pass_flags.norm_bound_below_delta0);
  }

  SECTION("domain") {
    REQUIRE_THROWS_AS(epsilon_chain(0.0), InvariantViolation);
    REQUIRE_THROWS_AS(epsilon_chain(0.8), InvariantViolation);
  }

  SECTION("CSV serialization") {
    std::ostringstream out;
    write_bounds_csv_header(out);
    write_bounds_csv_row(out, epsilon_chain(0.09));
    std::istringstream in(out.str());
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    REQUIRE(header.substr(0, 4) == "eps,");
    // 17 significant digits round-trip the stored eps exactly
    REQUIRE(std::stod(row.substr(0, row.find(','))) == 0.09);
    REQUIRE(row.back() == '1');
  }
}

TEST_CASE("general matrix functions round-trip") {
  UniformRng rng(9);
  MatrixXd a = 0.4 * rng.signed_matrix(5, 5);
  MatrixXd back = logm_general(expm_general(a));
  REQUIRE(spectral_norm(back - a) <= 1e-12);
}

TEST_CASE("property suites pass") {
  auto checks = run_all_suites(20250101, 200);
  for (const auto& c : checks) {
    INFO(c.name << " observed=" << c.observed << " bound=" << c.bound);
    CHECK(c.pass);
  }
}
