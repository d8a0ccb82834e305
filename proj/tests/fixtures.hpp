#pragma once

#include "oracles.hpp"
#include "slope/path.hpp"

#include <memory>

namespace fixture {

/// Dense random problem with a response simulated from the first columns.
struct Problem
{
  Problem(slope::Loss loss, Eigen::Index n, Eigen::Index p, std::uint64_t seed, int classes = 3)
    : rng(seed)
    , raw(rng.matrix(n, p))
    , x(std::make_unique<slope::DesignMatrix>(raw))
    , family(slope::Loss::gaussian)
  {
    int m = 0;
    y = slope::make_response(loss, oracle::simulate_response(loss, raw, rng, classes), m);
    family = slope::Family(loss, m);
  }

  slope::MatrixView view() const { return slope::MatrixView(*x); }
  Eigen::Index total() const { return raw.cols() * family.responses(); }
  slope::LambdaSequence bh(double q = 0.1) const
  {
    slope::LambdaOptions o;
    o.q = q;
    return slope::make_lambda(slope::LambdaKind::bh, total(), o);
  }

  oracle::Random rng;
  Eigen::MatrixXd raw;
  std::unique_ptr<slope::DesignMatrix> x;
  slope::Family family;
  Eigen::MatrixXd y;
};

inline Eigen::VectorXd
flat(const Eigen::MatrixXd& beta)
{
  return Eigen::Map<const Eigen::VectorXd>(beta.data(), beta.size());
}

} // namespace fixture
