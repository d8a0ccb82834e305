#include "fixtures.hpp"
#include "slope/solver.hpp"

#include <doctest.h>

using namespace slope;

TEST_SUITE("solver")
{
  TEST_CASE("every family converges with and without coordinate descent")
  {
    for (auto loss : { Loss::gaussian, Loss::binomial, Loss::poisson, Loss::multinomial }) {
      fixture::Problem pr(loss, 50, 20, 5);
      const auto lam = pr.bh();
      const double amax = alpha_max(pr.view(), pr.family, pr.y, lam);
      for (int cd : { 0, 10 }) {
        SolverConfig cfg;
        cfg.tol = 1e-10;
        cfg.cd_maxit = cd;
        const auto fit = solve(pr.view(), pr.family, pr.y, lam, 0.1 * amax, cfg);
        CHECK(fit.converged());
        CHECK(fit.relative_gap <= 1e-10);
        CHECK(fit.dual <= fit.primal + 1e-10);
        CHECK(fit.clusters.validate(std::span<const double>(fit.beta.data(), fit.beta.size())).empty());
      }
    }
  }

  TEST_CASE("alpha at or above alpha_max gives the null model")
  {
    fixture::Problem pr(Loss::binomial, 40, 8, 2);
    const auto lam = pr.bh();
    const double amax = alpha_max(pr.view(), pr.family, pr.y, lam);
    SolverConfig cfg;
    cfg.tol = 1e-10;
    const auto fit = solve(pr.view(), pr.family, pr.y, lam, amax, cfg);
    CHECK(fit.beta.isZero());
    CHECK(fit.beta0(0) == doctest::Approx(pr.family.null_intercept(pr.y)(0)).epsilon(1e-6));
  }

  TEST_CASE("orthogonal gaussian design reaches soft thresholding")
  {
    DesignMatrix x(Eigen::MatrixXd::Identity(2, 2) * std::sqrt(2.0));
    Eigen::MatrixXd y(2, 1);
    y << 3, -1;
    Family f(Loss::gaussian);
    SolverConfig cfg;
    cfg.tol = 1e-12;
    cfg.intercept = false;
    const LambdaSequence lam(Eigen::Vector2d(1, 1));
    const auto fit = solve(MatrixView(x), f, y, lam, 0.5, cfg);
    // (1/n) x_j^T x_j = 1, so beta = soft(x_j^T y / n, alpha)
    CHECK(fit.beta(0, 0) == doctest::Approx(3.0 / std::sqrt(2.0) - 0.5));
    CHECK(fit.beta(1, 0) == doctest::Approx(-1.0 / std::sqrt(2.0) + 0.5));
  }

  TEST_CASE("duplicated columns share a magnitude")
  {
    fixture::Problem pr(Loss::gaussian, 40, 5, 9);
    Eigen::MatrixXd m(40, 6);
    m << pr.raw, pr.raw.col(0);
    DesignMatrix x(m);
    LambdaOptions o;
    const auto lam = make_lambda(LambdaKind::bh, 6, o);
    SolverConfig cfg;
    cfg.tol = 1e-12;
    const double amax = alpha_max(MatrixView(x), pr.family, pr.y, lam);
    const auto fit = solve(MatrixView(x), pr.family, pr.y, lam, 0.05 * amax, cfg);
    CHECK(fit.relative_gap <= 1e-8);
    CHECK(std::abs(std::abs(fit.beta(0, 0)) - std::abs(fit.beta(5, 0))) < 1e-8);
  }

  TEST_CASE("trace records the certificate per iteration")
  {
    fixture::Problem pr(Loss::poisson, 30, 6, 4);
    SolverConfig cfg;
    cfg.record_trace = true;
    cfg.tol = 1e-8;
    const auto lam = pr.bh();
    const auto fit = solve(pr.view(), pr.family, pr.y, lam, 0.2 * alpha_max(pr.view(), pr.family, pr.y, lam), cfg);
    REQUIRE(!fit.trace.empty());
    for (const auto& row : fit.trace) {
      CHECK(row.dual <= row.primal + 1e-10);
    }
    CHECK(fit.trace.back().relative_gap <= 1e-8);
  }

  TEST_CASE("max iterations reports non-convergence")
  {
    fixture::Problem pr(Loss::binomial, 40, 10, 6);
    SolverConfig cfg;
    cfg.tol = 1e-14;
    cfg.max_it = 2;
    cfg.cd_maxit = 0;
    const auto lam = pr.bh();
    const auto fit = solve(pr.view(), pr.family, pr.y, lam, 0.01 * alpha_max(pr.view(), pr.family, pr.y, lam), cfg);
    CHECK(fit.status == SolveStatus::max_iterations);
    CHECK(std::isfinite(fit.primal));
  }

  TEST_CASE("seeded runs are reproducible")
  {
    fixture::Problem pr(Loss::gaussian, 30, 12, 8);
    SolverConfig cfg;
    cfg.seed = 42;
    const auto lam = pr.bh();
    const double a = 0.1 * alpha_max(pr.view(), pr.family, pr.y, lam);
    const auto f1 = solve(pr.view(), pr.family, pr.y, lam, a, cfg);
    const auto f2 = solve(pr.view(), pr.family, pr.y, lam, a, cfg);
    CHECK(f1.beta == f2.beta);
    CHECK(f1.iterations == f2.iterations);
  }

  TEST_CASE("sparse and dense storage give the same fit")
  {
    fixture::Problem pr(Loss::gaussian, 30, 8, 10);
    DesignMatrix xs(SparseMatrix(pr.raw.sparseView()));
    SolverConfig cfg;
    cfg.tol = 1e-12;
    cfg.cd_order = CdOrder::cyclic;
    const auto lam = pr.bh();
    const double a = 0.1 * alpha_max(pr.view(), pr.family, pr.y, lam);
    const auto fd = solve(pr.view(), pr.family, pr.y, lam, a, cfg);
    const auto fs = solve(MatrixView(xs), pr.family, pr.y, lam, a, cfg);
    CHECK((fd.beta - fs.beta).norm() < 1e-8);
  }

  TEST_CASE("option parsing")
  {
    CHECK(parse_cd_order("cyclic") == CdOrder::cyclic);
    CHECK_THROWS(parse_cd_order("zigzag"));
    CHECK(to_string(SolveStatus::line_search_failure) == "line_search_failure");
  }
}
