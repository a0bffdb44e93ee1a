// Command line for the Stiefel/Grassmann geodesic routines: point-wise
// exp/log/dist on matrix files, seeded batch experiments with CSV output,
// the explicit St(4,2) demonstration, and the bound-verification batch.
//
// Matrix files are whitespace text or MatrixMarket array format (detected on
// read; ".mtx" selects MatrixMarket on write). CSV output is deterministic
// for fixed flags; wall-clock times only ever appear on the console.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "stgeo/experiments.hpp"

using namespace stgeo;

namespace {

constexpr double kPi = 3.14159265358979323846;

LogNorm parse_norm(const std::string& s) {
  if (s == "2" || s == "spectral") return LogNorm::Spectral;
  if (s == "fro" || s == "frobenius") return LogNorm::Frobenius;
  throw CLI::ValidationError("--norm", "expected one of: 2, fro");
}

// Stopping-rule options; every subcommand owns one instance so that
// defaults cannot leak across subcommands.
struct StopFlags {
  double tau = 1e-13;
  std::string norm = "2";
  long max_iter = 1000;

  void attach(CLI::App* cmd) {
    cmd->add_option("--tau", tau, "convergence threshold on ||C_k||");
    cmd->add_option("--norm", norm, "stopping norm: 2 (spectral) or fro");
    cmd->add_option("--max-iter", max_iter, "maximum corrective updates");
  }
  LogConfig config() const {
    LogConfig cfg;
    cfg.tau = tau;
    cfg.max_iter = max_iter;
    cfg.norm_kind = parse_norm(norm);
    return cfg;
  }
};

void print_rows(const std::vector<experiments::ExperimentRow>& rows) {
  std::printf("%7s %5s %9s %5s %20s %6s %12s %12s %12s %9s\n", "n", "p",
              "dist", "run", "status", "iters", "|U-Ut|_2", "|logV0|_2",
              "recon", "time[ms]");
  for (const auto& r : rows)
    std::printf("%7ld %5ld %9.4f %5llu %20s %6ld %12.4e %12.4e %12.4e %9.2f\n",
                (long)r.n, (long)r.p, r.dist,
                (unsigned long long)r.seed_index, to_string(r.status),
                r.iterations, r.norm_u_diff, r.norm_logV0, r.recon_error,
                r.wall_ms);
}

void maybe_write_rows(const std::string& out,
                      const std::vector<experiments::ExperimentRow>& rows) {
  if (out.empty()) return;
  std::ofstream f(out, std::ios::binary);
  if (!f) throw io::IoError("cannot open " + out + " for writing");
  experiments::write_rows_csv(f, rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian exponential/logarithm on the Stiefel manifold "
               "(canonical metric), Grassmann closed forms, and experiment "
               "harness"};
  app.require_subcommand(1);

  // ---- exp ----------------------------------------------------------------
  struct {
    std::string point, tangent, out;
    bool project = false;
  } exp_opt;
  auto* cmd_exp = app.add_subcommand(
      "exp", "evaluate the Riemannian exponential for U and Delta from files");
  cmd_exp->add_option("--point", exp_opt.point, "base point U (n x p)")
      ->required();
  cmd_exp->add_option("--tangent", exp_opt.tangent, "tangent Delta (n x p)")
      ->required();
  cmd_exp->add_option("--out", exp_opt.out, "output file for Exp_U(Delta)");
  cmd_exp->add_flag("--project", exp_opt.project,
                    "project the input onto the tangent space first");

  // ---- log ----------------------------------------------------------------
  struct {
    std::string point, target, out, report;
    StopFlags stop;
  } log_opt;
  auto* cmd_log = app.add_subcommand(
      "log", "evaluate the Riemannian logarithm for U and Ut from files");
  cmd_log->add_option("--point", log_opt.point, "base point U")->required();
  cmd_log->add_option("--target", log_opt.target, "endpoint Ut")->required();
  cmd_log->add_option("--out", log_opt.out, "output file for Log_U(Ut)");
  cmd_log->add_option("--report", log_opt.report,
                      "CSV file for the convergence history (k, norm_C)");
  log_opt.stop.attach(cmd_log);

  // ---- dist ---------------------------------------------------------------
  struct {
    std::string point, target;
    StopFlags stop;
  } dist_opt;
  auto* cmd_dist = app.add_subcommand(
      "dist", "Riemannian distance between two points from files");
  cmd_dist->add_option("--point", dist_opt.point, "base point U")->required();
  cmd_dist->add_option("--target", dist_opt.target, "endpoint Ut")->required();
  dist_opt.stop.attach(cmd_dist);

  // ---- table1 -------------------------------------------------------------
  struct {
    long n = 10, p = 2, runs = 1;
    double dist = 0.44 * kPi;
    std::uint64_t seed = 1;
    std::string out;
    bool with_p900 = false, with_large = false;
    StopFlags stop;
  } table_opt;
  auto* cmd_table = app.add_subcommand(
      "table1", "seeded summary runs (iterations, gaps, reconstruction)");
  cmd_table->add_option("--n", table_opt.n, "rows of the Stiefel matrices");
  cmd_table->add_option("--p", table_opt.p, "columns of the Stiefel matrices");
  cmd_table->add_option("--dist", table_opt.dist,
                        "Riemannian distance in radians");
  cmd_table->add_option("--runs", table_opt.runs, "runs per configuration");
  cmd_table->add_option("--seed", table_opt.seed, "base seed");
  cmd_table->add_option("--out", table_opt.out, "CSV output path");
  cmd_table->add_flag("--with-p900", table_opt.with_p900,
                      "include the St(1000,900) rows (slow)");
  cmd_table->add_flag("--with-large", table_opt.with_large,
                      "include the St(100000,500) rows (very slow)");
  table_opt.stop.attach(cmd_table);

  // ---- avg-iters ----------------------------------------------------------
  struct {
    long n = 10, p = 2, runs = 1000;
    double dist = 0.44 * kPi;
    std::uint64_t seed = 1;
    std::string out;
    StopFlags stop{1e-7, "fro", 1000};
  } avg_opt;
  auto* cmd_avg = app.add_subcommand(
      "avg-iters", "mean matrix-log evaluations per run over random pairs");
  cmd_avg->add_option("--n", avg_opt.n, "rows");
  cmd_avg->add_option("--p", avg_opt.p, "columns");
  cmd_avg->add_option("--dist", avg_opt.dist, "Riemannian distance in radians");
  cmd_avg->add_option("--runs", avg_opt.runs, "number of random pairs");
  cmd_avg->add_option("--seed", avg_opt.seed, "base seed");
  cmd_avg->add_option("--out", avg_opt.out, "CSV output path");
  avg_opt.stop.attach(cmd_avg);

  // ---- sweep --------------------------------------------------------------
  struct {
    long n = 100, p = 10;
    std::uint64_t seed = 1;
    double grid_start = 0.1, grid_stop = 0.9 * kPi;
    int grid_count = 100;
    std::string out;
    StopFlags stop;
  } sweep_opt;
  auto* cmd_sweep = app.add_subcommand(
      "sweep", "distance sweep along one random geodesic direction");
  cmd_sweep->add_option("--n", sweep_opt.n, "rows");
  cmd_sweep->add_option("--p", sweep_opt.p, "columns");
  cmd_sweep->add_option("--seed", sweep_opt.seed, "base seed");
  cmd_sweep->add_option("--grid-start", sweep_opt.grid_start,
                        "first distance value");
  cmd_sweep->add_option("--grid-stop", sweep_opt.grid_stop,
                        "last distance value");
  cmd_sweep->add_option("--grid-count", sweep_opt.grid_count,
                        "number of grid points");
  cmd_sweep->add_option("--out", sweep_opt.out, "CSV output path");
  sweep_opt.stop.attach(cmd_sweep);

  // ---- special-case -------------------------------------------------------
  auto* cmd_special = app.add_subcommand(
      "special-case",
      "run the explicit St(4,2) demonstration of the start-matrix ambiguity");

  // ---- bounds -------------------------------------------------------------
  struct {
    int samples = 1000;
    std::uint64_t seed = 20250101;
    std::string out;
  } bounds_opt;
  auto* cmd_bounds = app.add_subcommand(
      "bounds", "verify the convergence bounds on random samples");
  cmd_bounds->add_option("--samples", bounds_opt.samples,
                         "samples per property");
  cmd_bounds->add_option("--seed", bounds_opt.seed, "base seed");
  cmd_bounds->add_option("--out", bounds_opt.out, "CSV output path");

  // ---- grassmann-roundtrip ------------------------------------------------
  struct {
    long n = 40, p = 5, runs = 200;
    std::uint64_t seed = 1;
  } gr_opt;
  auto* cmd_gr = app.add_subcommand(
      "grassmann-roundtrip", "Grassmann exp/log round-trip verification");
  cmd_gr->add_option("--n", gr_opt.n, "rows");
  cmd_gr->add_option("--p", gr_opt.p, "columns");
  cmd_gr->add_option("--runs", gr_opt.runs, "number of random cases");
  cmd_gr->add_option("--seed", gr_opt.seed, "base seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_exp) {
      StiefelPoint u(io::read_matrix(exp_opt.point));
      MatrixXd d = io::read_matrix(exp_opt.tangent);
      StiefelTangent delta =
          exp_opt.project ? project_to_tangent(u, d) : StiefelTangent(u, d);
      ExpResult res = stiefel_exp(u, delta);
      if (!exp_opt.out.empty())
        io::write_matrix(exp_opt.out, res.point.matrix());
      std::printf("exp: |Delta|_U = %.17g, output %ld x %ld%s%s\n",
                  canonical_norm(u, delta), (long)res.point.rows(),
                  (long)res.point.cols(), exp_opt.out.empty() ? "" : " -> ",
                  exp_opt.out.c_str());
      return 0;
    }

    if (*cmd_log) {
      StiefelPoint u(io::read_matrix(log_opt.point));
      StiefelPoint ut(io::read_matrix(log_opt.target));
      LogResult res = stiefel_log(u, ut, log_opt.stop.config());
      std::printf("log: status=%s iterations=%ld |log_m(V0)|_2=%.17g\n",
                  to_string(res.report.status), res.report.iterations,
                  res.report.norm_logV0);
      if (!log_opt.report.empty()) {
        std::ofstream f(log_opt.report, std::ios::binary);
        write_history_csv(f, res.report);
      }
      if (res.report.status != LogStatus::Converged) return 1;
      if (!log_opt.out.empty())
        io::write_matrix(log_opt.out, res.tangent->matrix());
      std::printf("log: |Delta|_U = %.17g%s%s\n",
                  canonical_norm(u, *res.tangent),
                  log_opt.out.empty() ? "" : " -> ", log_opt.out.c_str());
      return 0;
    }

    if (*cmd_dist) {
      StiefelPoint u(io::read_matrix(dist_opt.point));
      StiefelPoint ut(io::read_matrix(dist_opt.target));
      std::printf("%.17g\n", distance(u, ut, dist_opt.stop.config()));
      return 0;
    }

    if (*cmd_table) {
      const LogConfig cfg = table_opt.stop.config();
      std::vector<experiments::ExperimentRow> rows;
      experiments::ExperimentSpec spec;
      spec.tau = cfg.tau;
      spec.norm_kind = cfg.norm_kind;
      spec.max_iter = cfg.max_iter;
      spec.runs = static_cast<int>(table_opt.runs);
      spec.seed = table_opt.seed;
      auto run_cfg = [&](Index rn, Index rp, double rd) {
        spec.n = rn;
        spec.p = rp;
        spec.dist = rd;
        auto batch = experiments::run_table1(spec);
        rows.insert(rows.end(), batch.begin(), batch.end());
      };
      if (cmd_table->count("--n") || cmd_table->count("--p") ||
          cmd_table->count("--dist")) {
        run_cfg(table_opt.n, table_opt.p, table_opt.dist);
      } else {
        for (double d : {0.44 * kPi, 0.89 * kPi}) run_cfg(10, 2, d);
        for (double d : {0.44 * kPi, 0.89 * kPi}) run_cfg(1000, 200, d);
        if (table_opt.with_p900)
          for (double d : {0.44 * kPi, 0.89 * kPi}) run_cfg(1000, 900, d);
        if (table_opt.with_large)
          for (double d : {0.44 * kPi, 0.89 * kPi}) run_cfg(100000, 500, d);
      }
      print_rows(rows);
      maybe_write_rows(table_opt.out, rows);
      return 0;
    }

    if (*cmd_avg) {
      const LogConfig cfg = avg_opt.stop.config();
      experiments::ExperimentSpec spec;
      spec.n = avg_opt.n;
      spec.p = avg_opt.p;
      spec.dist = avg_opt.dist;
      spec.runs = static_cast<int>(avg_opt.runs);
      spec.seed = avg_opt.seed;
      spec.tau = cfg.tau;
      spec.norm_kind = cfg.norm_kind;
      spec.max_iter = cfg.max_iter;
      auto res = experiments::run_avg_iters(spec);
      std::printf("mean matrix-log evaluations: %.6f over %d converged runs "
                  "(%d failed)\n",
                  res.mean_log_evals, res.converged, res.failed);
      if (!avg_opt.out.empty()) {
        std::ofstream f(avg_opt.out, std::ios::binary);
        f << "n,p,dist,runs,seed,tau,mean_log_evals,converged,failed\n"
          << avg_opt.n << ',' << avg_opt.p << ',' << io::fmt_g17(spec.dist)
          << ',' << avg_opt.runs << ',' << avg_opt.seed << ','
          << io::fmt_g17(cfg.tau) << ',' << io::fmt_g17(res.mean_log_evals)
          << ',' << res.converged << ',' << res.failed << '\n';
      }
      return res.converged > 0 ? 0 : 1;
    }

    if (*cmd_sweep) {
      const LogConfig cfg = sweep_opt.stop.config();
      experiments::ExperimentSpec spec;
      spec.n = sweep_opt.n;
      spec.p = sweep_opt.p;
      spec.seed = sweep_opt.seed;
      spec.tau = cfg.tau;
      spec.norm_kind = cfg.norm_kind;
      spec.max_iter = cfg.max_iter;
      spec.grid = {sweep_opt.grid_start, sweep_opt.grid_stop,
                   sweep_opt.grid_count};
      auto rows = experiments::run_sweep(spec);
      print_rows(rows);
      maybe_write_rows(sweep_opt.out, rows);
      int failures = 0;
      for (const auto& r : rows)
        if (r.status != LogStatus::Converged) ++failures;
      std::printf("sweep: %d/%d grid points failed to converge\n", failures,
                  sweep_opt.grid_count);
      return 0;
    }

    if (*cmd_special) {
      auto rec = experiments::run_special_case();
      std::printf("exponential reproduces the +-1/2 endpoint: max err %.2e\n",
                  rec.exp_max_err);
      std::printf("degenerate completion: %s\n",
                  to_string(rec.degenerate_status));
      std::printf("sign-flipped completion: %s after %ld corrections, "
                  "distance %.12f (pi/2 = %.12f), recon err %.2e\n",
                  to_string(rec.repaired_status), rec.repaired_iterations,
                  rec.repaired_dist, 0.5 * kPi, rec.recon_error);
      std::printf("%s\n", rec.passed ? "PASS" : "FAIL");
      return rec.passed ? 0 : 1;
    }

    if (*cmd_bounds) {
      std::printf("contraction factor at (sqrt(5)-1)/2: alpha = %.6f\n\n",
                  analysis::contraction_alpha(analysis::delta0()));
      std::vector<analysis::BoundsReport> chain;
      for (double e : {0.01, 0.05, 0.09, 0.0912, 0.0913, 0.2})
        chain.push_back(analysis::epsilon_chain(e));
      std::ostringstream table;
      analysis::print_bounds_table(table, chain);
      std::fputs(table.str().c_str(), stdout);
      std::printf("\n");

      auto checks =
          experiments::run_bounds(bounds_opt.seed, bounds_opt.samples);
      int failures = 0;
      std::printf("%-42s %6s %14s %14s\n", "check", "pass", "observed",
                  "bound");
      for (const auto& c : checks) {
        if (!c.pass) ++failures;
        std::printf("%-42s %6s %14.6e %14.6e\n", c.name.c_str(),
                    c.pass ? "yes" : "NO", c.observed, c.bound);
      }
      if (!bounds_opt.out.empty()) {
        std::ofstream f(bounds_opt.out, std::ios::binary);
        experiments::write_checks_csv(f, checks);
      }
      std::printf("%d/%zu checks failed\n", failures, checks.size());
      return failures == 0 ? 0 : 1;
    }

    if (*cmd_gr) {
      double worst_rt = 0.0, worst_agree = 0.0;
      for (long r = 0; r < gr_opt.runs; ++r) {
        UniformRng rng = UniformRng::for_stream(gr_opt.seed,
                                                static_cast<std::uint64_t>(r));
        StiefelPoint u = random_stiefel_from(rng, gr_opt.n, gr_opt.p);
        MatrixXd t = rng.signed_matrix(gr_opt.n, gr_opt.p);
        MatrixXd h = t - u.matrix() * (u.matrix().transpose() * t);
        h *= (0.99 * 0.5 * kPi) * (0.2 + 0.8 * rng.next()) /
             svd(h).singular.maxCoeff();
        GrassmannPoint gu(u);
        HorizontalTangent delta(gu, h);
        GrassmannPoint gt = grassmann_exp(gu, delta);
        HorizontalTangent rec = grassmann_log(gu, gt);
        worst_rt = std::max(worst_rt, spectral_norm(rec.matrix() - h));
        StiefelPoint st = stiefel_exp(u, StiefelTangent(u, h)).point;
        worst_agree =
            std::max(worst_agree, spectral_norm(st.matrix() - gt.matrix()));
      }
      const bool pass = worst_rt < 1e-11 && worst_agree < 1e-10;
      std::printf("grassmann round-trip over %ld runs: worst recon %.2e "
                  "(limit 1e-11), worst exp agreement %.2e (limit 1e-10) -> "
                  "%s\n",
                  gr_opt.runs, worst_rt, worst_agree, pass ? "PASS" : "FAIL");
      return pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
