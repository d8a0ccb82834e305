#include "oracles.hpp"
#include "slope/clusters.hpp"

#include <doctest.h>

using namespace slope;

namespace {

std::vector<std::vector<int>>
groups(const Clusters& c)
{
  std::vector<std::vector<int>> out;
  for (int k = 0; k < c.size(); ++k) {
    auto idx = c.indices(k);
    std::vector<int> g(idx.begin(), idx.end());
    std::sort(g.begin(), g.end());
    out.push_back(g);
  }
  return out;
}

} // namespace

TEST_SUITE("clusters")
{
  TEST_CASE("from_beta")
  {
    const std::vector<double> beta{ 0.5, -0.5, 0.3, 0.7 };
    const auto c = Clusters::from_beta(beta);
    CHECK(c.c() == std::vector<double>{ 0.7, 0.5, 0.3 });
    CHECK(groups(c) == std::vector<std::vector<int>>{ { 3 }, { 0, 1 }, { 2 } });
    CHECK(c.validate(beta).empty());
    CHECK(c.zero_cluster() == -1);
    CHECK(c.find(0.5) == 1);
    CHECK(c.find(0.6) == -1);

    const std::vector<double> zero(4, 0.0);
    const auto z = Clusters::from_beta(zero);
    CHECK(z.size() == 1);
    CHECK(z.zero_cluster() == 0);
    CHECK(z.cluster_size(0) == 4);
    CHECK(z.n_nonzero() == 0);

    const std::vector<double> near{ 1.0, 1.0 + 1e-12, 0.5 };
    CHECK(Clusters::from_beta(near).size() == 3);
    const auto tol = Clusters::from_beta(near, 1e-9);
    CHECK(tol.size() == 2);
    CHECK(tol.coeff(0) == 1.0 + 1e-12);
  }

  TEST_CASE("merge and removal")
  {
    const std::vector<double> beta{ 0.5, -0.5, 0.3, 0.7 };
    auto c = Clusters::from_beta(beta);
    c.update(1, 0.7, 0);
    CHECK(c.size() == 2);
    CHECK(groups(c)[0] == std::vector<int>{ 0, 1, 3 });
    CHECK(c.validate().empty());

    auto d = Clusters::from_beta(beta);
    d.update(0, 0.0);
    CHECK(d.zero_cluster() == 2);
    CHECK(groups(d)[2] == std::vector<int>{ 3 });

    CHECK_THROWS_AS(d.update(0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(d.update(5, 1.0), std::out_of_range);
  }

  TEST_CASE("round trip")
  {
    oracle::Random rng(1);
    for (int rep = 0; rep < 200; ++rep) {
      const int p = rng.integer(1, 12);
      std::vector<double> beta(static_cast<std::size_t>(p));
      for (auto& b : beta) {
        b = rng.integer(-3, 3) * 0.25;
      }
      const auto c = Clusters::from_beta(beta);
      CHECK(c.validate(beta).empty());
      const auto mags = c.magnitudes();
      for (int j = 0; j < p; ++j) {
        CHECK(mags[static_cast<std::size_t>(j)] == std::abs(beta[static_cast<std::size_t>(j)]));
      }
      const auto again = Clusters::from_beta(mags);
      CHECK(again.c() == c.c());
      CHECK(groups(again) == groups(c));
    }
  }

  TEST_CASE("random update sequences match a rebuild")
  {
    oracle::Random rng(99);
    for (int rep = 0; rep < 1000; ++rep) {
      const int p = rng.integer(1, 10);
      std::vector<double> mags(static_cast<std::size_t>(p));
      for (auto& b : mags) {
        b = rng.integer(0, 5) * 0.5;
      }
      auto c = Clusters::from_beta(mags);
      for (int step = 0; step < 8; ++step) {
        const int k = rng.integer(0, c.size() - 1);
        const double z = rng.integer(0, 6) * 0.5 + (rng.uniform() < 0.3 ? 0.25 : 0.0);
        c.update(k, z);
        mags = c.magnitudes();
        REQUIRE(c.validate(mags).empty());
        const auto rebuilt = Clusters::from_beta(mags);
        CHECK(rebuilt.c() == c.c());
        CHECK(groups(rebuilt) == groups(c));
      }
    }
  }

  TEST_CASE("pattern csv")
  {
    const std::vector<double> beta{ 0.5, -0.5, 0.0 };
    const auto c = Clusters::from_beta(beta);
    const auto csv = cluster_pattern_csv(c, beta);
    CHECK(csv.rfind("coefficient_index,cluster_id,magnitude,sign\n", 0) == 0);
    CHECK(csv.find("1,0,0.5,-1\n") != std::string::npos);
    CHECK(csv.find("2,1,0,0\n") != std::string::npos);
  }
}
