#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stgeo/stiefel.hpp"

using namespace stgeo;

namespace {

constexpr double kPi = 3.14159265358979323846;

MatrixXd random_orthogonal(UniformRng& rng, Index p, double max_angle) {
  MatrixXd g = rng.signed_matrix(p, p);
  MatrixXd s = g - g.transpose().eval();
  s *= max_angle / spectral_norm(s);
  return expm_skew(SkewSymmetricMatrix(s)).matrix();
}

}  // namespace

TEST_CASE("project_to_tangent") {
  StiefelPoint u = random_stiefel(9, 3, 2);

  SECTION("idempotent on tangents") {
    StiefelTangent d = random_tangent(u, 0.7, 3);
    StiefelTangent again = project_to_tangent(u, d.matrix());
    REQUIRE((again.matrix() - d.matrix()).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SECTION("the base point projects to zero") {
    StiefelTangent d = project_to_tangent(u, u.matrix());
    REQUIRE(d.matrix().cwiseAbs().maxCoeff() <= 1e-14);
  }

  SECTION("output satisfies the tangency condition") {
    UniformRng rng(5);
    MatrixXd x = rng.signed_matrix(9, 3);
    StiefelTangent d = project_to_tangent(u, x);
    MatrixXd res = u.matrix().transpose() * d.matrix();
    res += res.transpose().eval();
    REQUIRE(res.cwiseAbs().maxCoeff() <= 1e-12);
  }

  SECTION("dimension mismatch") {
    REQUIRE_THROWS_AS(project_to_tangent(u, MatrixXd::Zero(4, 3)),
                      InvariantViolation);
  }
}

TEST_CASE("canonical metric") {
  UniformRng rng(7);
  StiefelPoint u = random_stiefel(8, 2, 7);

  SECTION("horizontal part counts half") {
    MatrixXd a(2, 2);
    a << 0, -1, 1, 0;
    StiefelTangent d(u, u.matrix() * a);
    REQUIRE(canonical_inner(u, d, d) == Catch::Approx(1.0).margin(1e-12));
  }

  SECTION("normal part counts in full") {
    MatrixXd t = rng.signed_matrix(8, 2);
    MatrixXd tn = t - u.matrix() * (u.matrix().transpose() * t);
    tn /= tn.norm();
    StiefelTangent d(u, tn);
    REQUIRE(canonical_inner(u, d, d) == Catch::Approx(1.0).margin(1e-12));
  }

  SECTION("norm identity tr(D^T D) - 1/2 tr(A^T A)") {
    StiefelTangent d = random_tangent(u, 1.3, 9);
    MatrixXd a = u.matrix().transpose() * d.matrix();
    const double expected = d.matrix().squaredNorm() - 0.5 * a.squaredNorm();
    REQUIRE(canonical_inner(u, d, d) ==
            Catch::Approx(expected).margin(1e-12));
  }

  SECTION("base mismatch is rejected") {
    StiefelPoint v = random_stiefel(8, 2, 8);
    StiefelTangent d = random_tangent(v, 1.0, 9);
    StiefelTangent e = random_tangent(u, 1.0, 9);
    REQUIRE_THROWS_AS(canonical_inner(u, d, e), InvariantViolation);
  }
}

TEST_CASE("stiefel_exp") {
  SECTION("zero tangent returns the base point") {
    StiefelPoint u = random_stiefel(10, 3, 1);
    ExpResult r = stiefel_exp(u, StiefelTangent(u, MatrixXd::Zero(10, 3)));
    REQUIRE((r.point.matrix() - u.matrix()).cwiseAbs().maxCoeff() <= 1e-14);
  }

  SECTION("same-subspace tangent U A maps to U expm(A)") {
    StiefelPoint u = random_stiefel(11, 4, 2);
    UniformRng rng(3);
    MatrixXd g = rng.signed_matrix(4, 4);
    MatrixXd a = g - g.transpose().eval();
    ExpResult r = stiefel_exp(u, StiefelTangent(u, u.matrix() * a));
    MatrixXd expected = u.matrix() * expm_skew(SkewSymmetricMatrix(a)).matrix();
    REQUIRE(spectral_norm(r.point.matrix() - expected) <= 1e-12);
  }

  SECTION("orthonormality is preserved") {
    for (int i = 0; i < 20; ++i) {
      UniformRng rng = UniformRng::for_stream(50, i);
      const Index p = 2 + static_cast<Index>(rng.next() * 5);
      const Index n = p + 1 + static_cast<Index>(rng.next() * 40);
      StiefelPoint u = random_stiefel_from(rng, n, p);
      StiefelTangent d = random_tangent_from(rng, u, 0.05 + 2.5 * rng.next());
      ExpResult r = stiefel_exp(u, d);
      MatrixXd gram = r.point.matrix().transpose() * r.point.matrix();
      gram.diagonal().array() -= 1.0;
      REQUIRE(spectral_norm(gram) < 1e-11);
      // factor blocks stay consistent
      MatrixXd fg = r.factors.m.transpose() * r.factors.m +
                    r.factors.n_e.transpose() * r.factors.n_e;
      fg.diagonal().array() -= 1.0;
      REQUIRE(spectral_norm(fg) <= 1e-10);
    }
  }

  SECTION("rejects a non-tangent direction") {
    StiefelPoint u = random_stiefel(6, 2, 4);
    REQUIRE_THROWS_AS(StiefelTangent(u, u.matrix()), InvariantViolation);
  }
}

TEST_CASE("build_completion") {
  SECTION("coincident points give the identity start matrix") {
    StiefelPoint u = random_stiefel(9, 3, 5);
    Completion c = build_completion(u, u);
    REQUIRE((c.m - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-14);
    REQUIRE(c.n.cwiseAbs().maxCoeff() <= 1e-14);
    REQUIRE((c.v0.matrix() - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <=
            1e-12);
  }

  SECTION("same-subspace endpoint gives a block-diagonal start matrix") {
    StiefelPoint u = random_stiefel(9, 3, 6);
    UniformRng rng(8);
    MatrixXd m = random_orthogonal(rng, 3, 2.0);
    Completion c = build_completion(u, StiefelPoint(u.matrix() * m));
    REQUIRE(c.n.cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE(c.x0.cwiseAbs().maxCoeff() <= 1e-12);
    // after the Procrustes step the lower-right block is the identity
    REQUIRE((c.y0 - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SECTION("starting norms for nearby points") {
    for (int i = 0; i < 10; ++i) {
      RandomPair pair = random_pair(40, 6, 0.25 + 0.1 * i, mix_seed(60, i));
      const double eps =
          spectral_norm(pair.u.matrix() - pair.ut.matrix());
      Completion c = build_completion(pair.u, pair.ut);
      REQUIRE(spectral_norm(MatrixXd::Identity(6, 6) - c.m) <=
              eps * (1.0 + 1e-12));
      REQUIRE(spectral_norm(c.n) <= eps * (1.0 + 1e-12));
      REQUIRE(std::abs(spectral_norm(c.n) - spectral_norm(c.x0)) <= 1e-10);
      REQUIRE(spectral_norm(c.y0 - MatrixXd::Identity(6, 6)) <=
              eps * eps + 1e-12);
      // Y0 is symmetric PSD with spectrum in [0,1]
      REQUIRE((c.y0 - c.y0.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(c.y0);
      REQUIRE(es.eigenvalues().minCoeff() >= -1e-12);
      REQUIRE(es.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("stiefel_log") {
  SECTION("coincident points converge without corrections") {
    StiefelPoint u = random_stiefel(12, 4, 9);
    LogResult res = stiefel_log(u, u);
    REQUIRE(res.report.status == LogStatus::Converged);
    REQUIRE(res.report.iterations == 0);
    REQUIRE(res.report.conv_hist.size() == 1);
    REQUIRE(res.tangent->matrix().cwiseAbs().maxCoeff() <= 1e-12);
  }

  SECTION("same-subspace endpoint recovers U logm(M)") {
    StiefelPoint u = random_stiefel(12, 4, 10);
    UniformRng rng(11);
    MatrixXd m = random_orthogonal(rng, 4, 0.8 * kPi);
    LogResult res = stiefel_log(u, StiefelPoint(u.matrix() * m));
    REQUIRE(res.report.status == LogStatus::Converged);
    REQUIRE(res.report.iterations <= 1);
    MatrixXd expected =
        u.matrix() * logm_orthogonal(OrthogonalMatrix(m)).matrix();
    REQUIRE(spectral_norm(res.tangent->matrix() - expected) <= 1e-11);
  }

  SECTION("an endpoint rotated by -I defeats the principal branch") {
    StiefelPoint u = random_stiefel(10, 2, 12);
    LogResult res = stiefel_log(u, StiefelPoint(-u.matrix()));
    REQUIRE(res.report.status == LogStatus::LogBranchFailure);
    REQUIRE(res.report.norm_logV0 == Catch::Approx(kPi).margin(1e-10));
  }

  SECTION("round-trip at canonical distance 0.4 pi on St(10,2)") {
    RandomPair pair = random_pair(10, 2, 0.4 * kPi, 77);
    LogResult res = stiefel_log(pair.u, pair.ut);
    REQUIRE(res.report.status == LogStatus::Converged);
    REQUIRE(res.report.iterations <= 25);
    REQUIRE(spectral_norm(res.tangent->matrix() - pair.delta.matrix()) <=
            1e-12);
    REQUIRE(res.report.conv_hist.size() ==
            static_cast<size_t>(res.report.iterations) + 1);
  }

  SECTION("round-trip property across sizes") {
    int idx = 0;
    for (auto [n, p] : {std::pair<Index, Index>{10, 2}, {20, 5}, {60, 8}}) {
      for (int i = 0; i < 6; ++i) {
        UniformRng seeds = UniformRng::for_stream(90, idx++);
        const double dist = (0.05 + 0.39 * seeds.next()) * kPi;
        RandomPair pair = random_pair(n, p, dist, mix_seed(91, idx));
        LogResult res = stiefel_log(pair.u, pair.ut);
        REQUIRE(res.report.status == LogStatus::Converged);
        REQUIRE(spectral_norm(res.tangent->matrix() - pair.delta.matrix()) <
                1e-11);
        // exp of the recovered tangent reproduces the endpoint
        StiefelPoint back = stiefel_exp(pair.u, *res.tangent).point;
        REQUIRE(spectral_norm(back.matrix() - pair.ut.matrix()) < 1e-10);
      }
    }
  }

  SECTION("iteration cap is honored") {
    RandomPair pair = random_pair(10, 2, 0.44 * kPi, 5);
    LogConfig cfg;
    cfg.max_iter = 2;
    LogResult res = stiefel_log(pair.u, pair.ut, cfg);
    REQUIRE(res.report.status == LogStatus::MaxIterExceeded);
    REQUIRE(res.report.iterations == 2);
    REQUIRE(res.report.conv_hist.size() == 3);
    REQUIRE(!res.tangent.has_value());
  }

  SECTION("Frobenius stopping rule") {
    RandomPair pair = random_pair(10, 2, 0.44 * kPi, 6);
    LogConfig cfg;
    cfg.tau = 1e-7;
    cfg.norm_kind = LogNorm::Frobenius;
    LogResult res = stiefel_log(pair.u, pair.ut, cfg);
    REQUIRE(res.report.status == LogStatus::Converged);
    REQUIRE(res.report.conv_hist.back() <= 1e-7);
  }

  SECTION("forced re-orthonormalization does not disturb the result") {
    RandomPair pair = random_pair(30, 4, 0.44 * kPi, 7);
    LogConfig cfg;
    cfg.reorth_tol = 0.0;  // re-orthonormalize after every update
    LogResult res = stiefel_log(pair.u, pair.ut, cfg);
    REQUIRE(res.report.status == LogStatus::Converged);
    REQUIRE(spectral_norm(res.tangent->matrix() - pair.delta.matrix()) <
            1e-11);
  }

  SECTION("angle guard is forwarded to the principal log") {
    RandomPair pair = random_pair(10, 2, 0.44 * kPi, 8);
    LogConfig cfg;
    cfg.angle_guard = 3.0;  // rejects any rotation angle above pi - 3
    LogResult res = stiefel_log(pair.u, pair.ut, cfg);
    REQUIRE(res.report.status == LogStatus::LogBranchFailure);
  }

  SECTION("contraction and iteration-ceiling guarantees") {
    // Runs inside the certified regime: every iterate log-norm stays below
    // (sqrt(5)-1)/2, so the block residual must halve per step; with
    // ||U - Ut||_2 < 0.0912 the iteration ceiling applies as well.
    int halving_runs = 0, ceiling_runs = 0;
    for (int i = 0; i < 10; ++i) {
      const double dist = 0.04 + 0.03 * i;
      RandomPair pair = random_pair(100, 10, dist, mix_seed(70, i));
      const double nd = spectral_norm(pair.u.matrix() - pair.ut.matrix());
      LogResult res = stiefel_log(pair.u, pair.ut);
      REQUIRE(res.report.status == LogStatus::Converged);
      ConvergenceAudit audit = audit_convergence(res.report, 1e-13, nd);
      if (audit.halving_applicable) {
        ++halving_runs;
        REQUIRE(audit.halving_holds);
      }
      if (audit.ceiling_applicable) {
        ++ceiling_runs;
        REQUIRE(audit.ceiling_holds);
      }
    }
    REQUIRE(halving_runs > 0);
    REQUIRE(ceiling_runs > 0);
  }

  SECTION("starting log-norm bound for nearby points") {
    // ||log_m(V_0)||_2 < 2 eps sqrt(1-eps^2)/(1-2 eps^2) whenever
    // ||U - Ut||_2 = eps < 1/sqrt(2).
    for (int i = 0; i < 10; ++i) {
      RandomPair pair = random_pair(30, 4, 0.1 + 0.12 * i, mix_seed(80, i));
      const double eps = spectral_norm(pair.u.matrix() - pair.ut.matrix());
      if (eps >= 1.0 / std::sqrt(2.0)) continue;
      LogResult res = stiefel_log(pair.u, pair.ut);
      const double bound =
          2.0 * eps * std::sqrt(1.0 - eps * eps) / (1.0 - 2.0 * eps * eps);
      REQUIRE(res.report.norm_logV0 < bound);
    }
  }
}

TEST_CASE("distance") {
  SECTION("coincident points") {
    StiefelPoint u = random_stiefel(9, 3, 21);
    REQUIRE(distance(u, u) <= 1e-12);
  }

  SECTION("same-subspace distance equals the angle formula") {
    StiefelPoint u = random_stiefel(14, 4, 22);
    UniformRng rng(23);
    MatrixXd m = random_orthogonal(rng, 4, 0.85 * kPi);
    const double d = distance(u, StiefelPoint(u.matrix() * m));
    // sqrt(1/2 sum phi_j^2) = ||logm(M)||_F / sqrt(2)
    const double expected =
        logm_orthogonal(OrthogonalMatrix(m)).matrix().norm() / std::sqrt(2.0);
    REQUIRE(d == Catch::Approx(expected).margin(1e-10));
    REQUIRE(d < std::sqrt(4.0 / 2.0) * kPi);  // p even
  }

  SECTION("round-trip distance matches the requested radius") {
    RandomPair pair = random_pair(10, 2, 0.44 * kPi, 24);
    REQUIRE(distance(pair.u, pair.ut) ==
            Catch::Approx(0.44 * kPi).margin(1e-11));
  }

  SECTION("failure propagates as an exception") {
    StiefelPoint u = random_stiefel(10, 2, 25);
    REQUIRE_THROWS_AS(distance(u, StiefelPoint(-u.matrix())), LogFailure);
  }
}

TEST_CASE("random data helpers") {
  SECTION("tangent norm matches the request") {
    StiefelPoint u = random_stiefel(15, 3, 30);
    for (double dist : {1e-3, 0.7, 2.9}) {
      StiefelTangent d = random_tangent(u, dist, 31);
      REQUIRE(canonical_norm(u, d) == Catch::Approx(dist).margin(1e-12 * std::max(1.0, dist)));
    }
  }

  SECTION("equal seeds are bitwise identical") {
    RandomPair a = random_pair(12, 3, 0.9, 1234);
    RandomPair b = random_pair(12, 3, 0.9, 1234);
    REQUIRE(a.u.matrix() == b.u.matrix());
    REQUIRE(a.ut.matrix() == b.ut.matrix());
    REQUIRE(a.delta.matrix() == b.delta.matrix());
    RandomPair c = random_pair(12, 3, 0.9, 1235);
    REQUIRE(a.u.matrix() != c.u.matrix());
  }

  SECTION("pair distance is the requested one") {
    RandomPair pair = random_pair(10, 2, 0.44 * kPi, 32);
    REQUIRE(canonical_norm(pair.u, pair.delta) ==
            Catch::Approx(0.44 * kPi).margin(1e-12));
  }
}
