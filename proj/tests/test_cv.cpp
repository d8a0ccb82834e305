#include "fixtures.hpp"
#include "slope/cv.hpp"

#include <doctest.h>

using namespace slope;

TEST_SUITE("cv")
{
  TEST_CASE("auc matches pairwise counting")
  {
    oracle::Random rng(12);
    for (int rep = 0; rep < 100; ++rep) {
      const Index n = rng.integer(2, 15);
      Eigen::VectorXd s(n), y(n);
      for (Index i = 0; i < n; ++i) {
        s(i) = rng.integer(0, 4); // frequent ties
        y(i) = rng.integer(0, 1);
      }
      y(0) = 0;
      y(1) = 1;
      CHECK(std::abs(auc(s, y) - oracle::auc_pairs(s, y)) <= 1e-12);
    }
    Eigen::Vector4d s(0.1, 0.2, 0.8, 0.9), y(0, 0, 1, 1);
    CHECK(auc(s, y) == 1.0);
    CHECK_THROWS_AS(auc(s, Eigen::Vector4d::Ones()), std::invalid_argument);
  }

  TEST_CASE("measures")
  {
    Family g(Loss::gaussian);
    Eigen::MatrixXd y(4, 1);
    y << 1, 2, 3, 6;
    const Eigen::MatrixXd mean = Eigen::MatrixXd::Constant(4, 1, 3.0);
    CHECK(evaluate_measure(Measure::mse, g, mean, y) == doctest::Approx(3.5));
    CHECK(evaluate_measure(Measure::mae, g, mean, y) == doctest::Approx(1.5));
    CHECK(evaluate_measure(Measure::deviance, g, mean, y) == doctest::Approx(3.5));

    Family b(Loss::binomial);
    Eigen::MatrixXd yb(4, 1), eta(4, 1);
    yb << 0, 1, 1, 0;
    eta << -1, 2, -0.5, 0.3;
    CHECK(evaluate_measure(Measure::misclass, b, eta, yb) == doctest::Approx(0.5));
    CHECK(parse_measure("auc") == Measure::auc);
    CHECK(default_measure(Loss::poisson) == Measure::deviance);
    CHECK(default_measure(Loss::gaussian) == Measure::mse);
  }

  TEST_CASE("folds are stratified and deterministic")
  {
    fixture::Problem pr(Loss::binomial, 40, 3, 1);
    const auto f1 = make_folds(pr.family, pr.y, 4, 2, 7);
    const auto f2 = make_folds(pr.family, pr.y, 4, 2, 7);
    CHECK(f1 == f2);
    REQUIRE(f1.size() == 2);
    const double ones = pr.y.sum();
    for (int fold = 0; fold < 4; ++fold) {
      double pos = 0.0;
      int count = 0;
      for (std::size_t i = 0; i < 40; ++i) {
        if (f1[0][i] == fold) {
          pos += pr.y(static_cast<Index>(i), 0);
          ++count;
        }
      }
      CHECK(count == 10);
      CHECK(std::abs(pos - ones / 4.0) <= 1.0);
    }
    CHECK_THROWS(make_folds(pr.family, pr.y, 1, 1, 0));
    CHECK_THROWS(make_folds(pr.family, pr.y, 41, 1, 0));
  }

  TEST_CASE("duplicated rows split along the copy")
  {
    // held-out rows identical to the training rows give the training error
    fixture::Problem pr(Loss::gaussian, 15, 4, 2);
    Eigen::MatrixXd m(30, 4);
    m << pr.raw, pr.raw;
    DesignMatrix x(m);
    std::vector<int> first(15), second(15);
    std::iota(first.begin(), first.end(), 0);
    std::iota(second.begin(), second.end(), 15);
    const auto norm = fit_normalization(MatrixView(x, first), Centering::mean, Scaling::sd);
    const MatrixView train(x, first, norm);
    const MatrixView test(x, second, norm);
    PathConfig pc;
    pc.path_length = 5;
    pc.early_stopping = false;
    const auto path = fit_path(train, pr.family, pr.y, pr.bh(), pc, SolverConfig{});
    for (const auto& fit : path.fits) {
      const double in = evaluate_measure(Measure::mse, pr.family, linear_predictor(train, fit.beta, fit.beta0), pr.y);
      const double out = evaluate_measure(Measure::mse, pr.family, linear_predictor(test, fit.beta, fit.beta0), pr.y);
      CHECK(in == out);
    }
  }

  TEST_CASE("optimum row agrees with its stored values")
  {
    fixture::Problem pr(Loss::binomial, 60, 6, 3);
    CvConfig cv;
    cv.n_folds = 3;
    cv.n_repeats = 2;
    cv.q_grid = { 0.1, 0.3 };
    cv.gamma_grid = { 0.0, 1.0 };
    cv.measure = Measure::auc;
    PathConfig pc;
    pc.path_length = 8;
    const auto copies = DesignMatrix::copy_count();
    const auto res = cross_validate(pr.view(), pr.family, pr.y, cv, pc, SolverConfig{});
    CHECK(DesignMatrix::copy_count() == copies);
    const auto& best = res.cells[res.optimum];
    double mean = 0.0;
    for (double v : best.values) {
      mean += v;
    }
    mean /= static_cast<double>(best.values.size());
    CHECK(best.mean == doctest::Approx(mean));
    for (const auto& c : res.cells) {
      CHECK(c.mean <= best.mean);
      CHECK(c.lo <= c.mean);
      CHECK(c.hi >= c.mean);
    }
  }

  TEST_CASE("measure must fit the family")
  {
    fixture::Problem pr(Loss::gaussian, 20, 3, 3);
    CvConfig cv;
    cv.measure = Measure::auc;
    CHECK_THROWS_AS(cross_validate(pr.view(), pr.family, pr.y, cv, PathConfig{}, SolverConfig{}),
                    std::invalid_argument);
  }
}
