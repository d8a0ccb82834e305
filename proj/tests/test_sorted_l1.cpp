#include "oracles.hpp"
#include "slope/sorted_l1.hpp"

#include <doctest.h>

using namespace slope;

namespace {

LambdaSequence
seq(std::initializer_list<double> v)
{
  Eigen::VectorXd x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double d : v) {
    x(i++) = d;
  }
  return LambdaSequence(x);
}

Eigen::VectorXd
vec(std::initializer_list<double> v)
{
  Eigen::VectorXd x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double d : v) {
    x(i++) = d;
  }
  return x;
}

} // namespace

TEST_SUITE("sorted_l1")
{
  TEST_CASE("lambda sequences")
  {
    LambdaOptions opt;
    opt.theta1 = 1.0;
    opt.theta2 = 1.0;
    const auto oscar = make_lambda(LambdaKind::oscar, 3, opt);
    CHECK(oscar[0] == 3.0);
    CHECK(oscar[1] == 2.0);
    CHECK(oscar[2] == 1.0);
    CHECK(make_lambda(LambdaKind::lasso, 4, opt).values().isOnes());
    opt.q = 0.2;
    const auto bh = make_lambda(LambdaKind::bh, 2, opt);
    CHECK(bh[0] == doctest::Approx(1.6448536269514722).epsilon(1e-12));
    CHECK(bh[1] == doctest::Approx(1.2815515655446004).epsilon(1e-12));
    CHECK(bh.cumsum(2) == doctest::Approx(bh[0] + bh[1]));
    CHECK(bh.window(1, 1) == doctest::Approx(bh[1]));

    opt.n = 50;
    opt.q = 0.1;
    const auto g = make_lambda(LambdaKind::gaussian, 80, opt);
    const auto b = make_lambda(LambdaKind::bh, 80, opt);
    CHECK(g[0] == b[0]);
    for (Index j = 1; j < 80; ++j) {
      CHECK(g[j] <= g[j - 1]);
      CHECK(g[j] >= b[j]);
    }
    CHECK(g[79] == g[70]); // flat tail once n - j runs out
    opt.n = 0;
    CHECK_THROWS(make_lambda(LambdaKind::gaussian, 5, opt));
    CHECK_THROWS(make_lambda(LambdaKind::custom, 5, opt));
    CHECK(parse_lambda_kind("bh") == LambdaKind::bh);
    CHECK_THROWS(parse_lambda_kind("nope"));
  }

  TEST_CASE("lambda validation")
  {
    CHECK_THROWS_AS(seq({ 1.0, 2.0 }), std::invalid_argument);
    CHECK_THROWS_AS(seq({ 0.0, 0.0 }), std::invalid_argument);
    CHECK_THROWS_AS(seq({ 1.0, -1.0 }), std::invalid_argument);
    CHECK_NOTHROW(seq({ 1.0, 0.0 }));
    const auto p = seq({ 3.0, 2.0, 1.0 }).prefix(2);
    CHECK(p.size() == 2);
    CHECK(p.cumsum(2) == 5.0);
  }

  TEST_CASE("normal quantile")
  {
    for (double x : { -7.5, -6.0, -3.0, -1.0, -0.1, 0.0, 0.5, 2.0, 4.5 }) {
      const double p = oracle::normal_cdf(x);
      CHECK(std::abs(normal_quantile(p) - x) <= 1e-9 * std::max(1.0, std::abs(x)));
    }
    CHECK(std::isinf(normal_quantile(0.0)));
    CHECK(std::isinf(normal_quantile(1.0)));
  }

  TEST_CASE("sorted l1 norm and its dual")
  {
    const auto l = seq({ 4, 3, 2, 1 });
    CHECK(sorted_l1_norm(Eigen::VectorXd::Zero(4), l) == 0.0);
    CHECK(sorted_l1_norm(vec({ 0.5, -0.5, 0.3, 0.7 }), l) == doctest::Approx(5.6));
    CHECK(dual_norm(Eigen::VectorXd::Zero(2), seq({ 1, 1 })) == 0.0);
    CHECK(dual_norm(vec({ 2, 0 }), seq({ 1, 1 })) == doctest::Approx(2.0));
    CHECK(dual_norm(vec({ 1, 1 }), seq({ 2, 1 })) == doctest::Approx(2.0 / 3.0));

    oracle::Random rng(21);
    for (int rep = 0; rep < 200; ++rep) {
      const Index p = rng.integer(1, 7);
      const LambdaSequence lam(rng.lambda(p));
      const Eigen::VectorXd a = rng.vector(p), b = rng.vector(p), beta = rng.vector(p);
      const double s = rng.normal();
      CHECK(std::abs(dual_norm(s * a, lam) - std::abs(s) * dual_norm(a, lam)) <= 1e-10 * (1 + dual_norm(a, lam)));
      CHECK(dual_norm(a + b, lam) <= dual_norm(a, lam) + dual_norm(b, lam) + 1e-10);
      CHECK(sorted_l1_norm(beta, lam) == doctest::Approx(oracle::sorted_l1(beta, lam.values())));
      const Eigen::VectorXd z = a / dual_norm(a, lam);
      CHECK(z.dot(beta) <= sorted_l1_norm(beta, lam) + 1e-10);
    }
  }

  TEST_CASE("prox small cases")
  {
    const auto p1 = prox(vec({ 3, 1 }), seq({ 1, 1 }), 1.0, 1.0);
    CHECK(p1(0) == doctest::Approx(2.0));
    CHECK(p1(1) == 0.0);
    const auto p2 = prox(vec({ 3, 2.5 }), seq({ 2, 1 }), 1.0, 1.0);
    CHECK(p2(0) == doctest::Approx(1.25));
    CHECK(p2(1) == doctest::Approx(1.25));
    const auto p3 = prox(vec({ -3, 2.5 }), seq({ 2, 1 }), 0.5, 2.0);
    CHECK(p3(0) == doctest::Approx(-1.25));
    CHECK(p3(1) == doctest::Approx(1.25));
  }

  TEST_CASE("prox properties")
  {
    oracle::Random rng(8);
    for (int rep = 0; rep < 300; ++rep) {
      const Index p = rng.integer(1, 8);
      const LambdaSequence lam(rng.lambda(p));
      const double tau = rng.uniform(0.05, 2.0);
      const Eigen::VectorXd a = 2.0 * rng.vector(p), b = 2.0 * rng.vector(p);
      const Eigen::VectorXd pa = prox(a, lam, tau, 1.0), pb = prox(b, lam, 1.0, tau);
      const Eigen::VectorXd pb2 = prox(b, lam, tau, 1.0);
      CHECK((pb - pb2).norm() <= 1e-12);
      CHECK((pa - pb).norm() <= (a - b).norm() + 1e-12);
      for (Index j = 0; j < p; ++j) {
        CHECK(pa(j) * a(j) >= 0.0);
        CHECK(std::abs(pa(j)) <= std::abs(a(j)) + 1e-15);
        for (Index i = 0; i < p; ++i) {
          if (std::abs(a(i)) > std::abs(a(j))) {
            CHECK(std::abs(pa(i)) >= std::abs(pa(j)));
          }
        }
      }
      CHECK(dual_norm(a - pa, lam) <= tau * (1 + 1e-10));
      // soft thresholding for constant weights
      const LambdaSequence flat(Eigen::VectorXd::Constant(p, 0.7));
      const Eigen::VectorXd soft = prox(a, flat, tau, 1.0);
      for (Index j = 0; j < p; ++j) {
        const double expect = std::copysign(std::max(0.0, std::abs(a(j)) - 0.7 * tau), a(j));
        CHECK(soft(j) == expect);
      }
    }
  }

  TEST_CASE("threshold reduces to soft thresholding for one cluster")
  {
    Eigen::VectorXd beta = vec({ 0.4, -0.4 });
    const auto c = Clusters::from_beta(std::span<const double>(beta.data(), 2));
    const auto lam = seq({ 1, 1 });
    for (double v : { -3.0, -0.5, 0.0, 0.3, 1.9, 5.0 }) {
      const double xi = 1.7, alpha = 0.6;
      const auto r = slope_threshold(v, xi, 0, c, lam, alpha);
      CHECK(r.magnitude == doctest::Approx(std::max(0.0, (v - alpha * 2.0) / xi)));
    }
  }

  TEST_CASE("threshold snaps onto neighbouring clusters")
  {
    // coefficients 0 and 1 form cluster 1 between 0.7 and 0.3
    Eigen::VectorXd beta = vec({ 0.5, -0.5, 0.3, 0.7 });
    const auto c = Clusters::from_beta(std::span<const double>(beta.data(), 4));
    REQUIRE(c.size() == 3);
    REQUIRE(c.coeff(1) == 0.5);
    const auto lam = seq({ 4, 3, 2, 1 });
    const double xi = 1.0, alpha = 0.1;
    std::vector<int> members{ 0, 1 };
    int hit_top = 0, hit_low = 0, hit_zero = 0;
    for (int i = 0; i <= 400; ++i) {
      const double v = -0.5 + 2.5 * i / 400.0;
      const auto r = slope_threshold(v, xi, 1, c, lam, alpha);
      const auto o = oracle::threshold(v, xi, alpha, beta.cwiseAbs(), members, lam.values());
      CHECK(std::abs(r.magnitude - o.z) <= 1e-8);
      if (r.magnitude == 0.7) {
        ++hit_top;
        CHECK(r.merge_target == std::optional<int>(0));
      }
      if (r.magnitude == 0.3) {
        ++hit_low;
        CHECK(r.merge_target == std::optional<int>(2));
      }
      if (r.magnitude == 0.0) {
        ++hit_zero;
      }
    }
    CHECK(hit_top > 0);
    CHECK(hit_low > 0);
    CHECK(hit_zero > 0);
  }

  TEST_CASE("threshold rejects a non-positive curvature")
  {
    Eigen::VectorXd beta = vec({ 1.0 });
    const auto c = Clusters::from_beta(std::span<const double>(beta.data(), 1));
    CHECK_THROWS(slope_threshold(1.0, 0.0, 0, c, seq({ 1 }), 1.0));
  }
}
