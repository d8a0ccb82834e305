#pragma once

#include "slope/clusters.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace slope {

enum class LambdaKind
{
  bh,
  gaussian,
  oscar,
  lasso,
  custom
};

LambdaKind
parse_lambda_kind(const std::string& name);

std::string
to_string(LambdaKind kind);

/// Non-increasing, non-negative penalty weights with their prefix sums.
class LambdaSequence
{
public:
  LambdaSequence() = default;
  /// Throws std::invalid_argument unless `values` is non-increasing,
  /// non-negative and has a positive first element.
  explicit LambdaSequence(Eigen::VectorXd values,
                          LambdaKind kind = LambdaKind::custom);

  Eigen::Index size() const { return values_.size(); }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](Eigen::Index i) const { return values_(i); }
  LambdaKind kind() const { return kind_; }

  /// cumsum(k) = sum of the first k values; cumsum(0) = 0.
  double cumsum(Eigen::Index k) const { return cumsum_(k); }
  /// Sum of values[start, start + length).
  double window(Eigen::Index start, Eigen::Index length) const
  {
    return cumsum_(start + length) - cumsum_(start);
  }

  /// The first `length` values, as used for a screened subproblem.
  LambdaSequence prefix(Eigen::Index length) const;

  /// Parameters the sequence was generated from (informational).
  double q = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;

private:
  Eigen::VectorXd values_;
  Eigen::VectorXd cumsum_;
  LambdaKind kind_ = LambdaKind::custom;
};

struct LambdaOptions
{
  double q = 0.1;
  /// Sample count, required for the gaussian-type sequence.
  Eigen::Index n = 0;
  double theta1 = 1.0;
  double theta2 = 1.0;
};

LambdaSequence
make_lambda(LambdaKind kind, Eigen::Index p_total, const LambdaOptions& options);

/// Standard normal quantile function (Wichura's AS241).
double
normal_quantile(double p);

/// sum_j lambda_j |beta|_(j) with |beta| sorted in decreasing order.
double
sorted_l1_norm(const Eigen::Ref<const Eigen::VectorXd>& beta,
               const LambdaSequence& lambda);

/// max_j sum_{k<=j} |z|_(k) / sum_{k<=j} lambda_k
double
dual_norm(const Eigen::Ref<const Eigen::VectorXd>& z, const LambdaSequence& lambda);

/// argmin_x 0.5 ||x - v||^2 + step * alpha * J_lambda(x), computed with the
/// stack-based pool-adjacent-violators algorithm.
Eigen::VectorXd
prox(const Eigen::Ref<const Eigen::VectorXd>& v,
     const LambdaSequence& lambda,
     double alpha,
     double step);

struct ThresholdResult
{
  double magnitude = 0.0;
  /// Cluster (in the input Clusters indexing) whose magnitude was taken, or
  /// the zero cluster when the result is 0 and one exists.
  std::optional<int> merge_target;
};

/// Minimizes 0.5 xi z^2 - v z + alpha H(z) over z >= 0, where H(z) is the
/// sorted-l1 norm with cluster k moved to magnitude z and every other cluster
/// held fixed. The search walks outward from cluster k's current position.
ThresholdResult
slope_threshold(double v,
                double xi,
                int k,
                const Clusters& clusters,
                const LambdaSequence& lambda,
                double alpha);

} // namespace slope
