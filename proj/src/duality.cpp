#include "slope/duality.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace slope {

DualPoint
feasible_dual_point(const MatrixView& x,
                    const Eigen::MatrixXd& r,
                    const LambdaSequence& lambda,
                    double alpha,
                    bool intercept)
{
  const Index p = x.cols();
  const Index K = r.cols();
  if (lambda.size() != p * K) {
    throw std::invalid_argument("lambda length must equal p times the class count");
  }
  const double n = static_cast<double>(x.rows());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(x.rows());
  Eigen::VectorXd grad(p * K);
  Eigen::VectorXd means(p * K);
  std::vector<Index> classes(static_cast<std::size_t>(p * K));
  for (Index k = 0; k < K; ++k) {
    const double r_sum = r.col(k).sum();
    for (Index j = 0; j < p; ++j) {
      grad(j + k * p) = x.column_dot(j, r.col(k), r_sum) / n;
      means(j + k * p) = x.column_dot(j, ones, n) / n;
      classes[static_cast<std::size_t>(j + k * p)] = k;
    }
  }
  return feasible_dual_point(r, grad, means, classes, lambda, alpha, intercept);
}

namespace {

// Divides delta by max(1, J*(shifted) / alpha).
void
scale_into_ball(DualPoint& out, const Eigen::VectorXd& shifted, const LambdaSequence& lambda, double alpha)
{
  const double norm = shifted.size() > 0 ? dual_norm(shifted, lambda) : 0.0;
  if (alpha > 0.0) {
    out.scale = std::max(1.0, norm / alpha);
  } else {
    out.scale = norm > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }
  if (std::isinf(out.scale)) {
    out.delta.setZero();
  } else if (out.scale > 1.0) {
    out.delta /= out.scale;
  }
}

Eigen::VectorXd
view_gradient(const MatrixView& x, const Eigen::MatrixXd& r)
{
  const Index p = x.cols();
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd grad(p * r.cols());
  for (Index k = 0; k < r.cols(); ++k) {
    const double r_sum = r.col(k).sum();
    for (Index j = 0; j < p; ++j) {
      grad(j + k * p) = x.column_dot(j, r.col(k), r_sum) / n;
    }
  }
  return grad;
}

} // namespace

DualPoint
feasible_dual_point(const Eigen::MatrixXd& r,
                    const Eigen::VectorXd& grad,
                    const Eigen::VectorXd& column_means,
                    const std::vector<Index>& classes,
                    const LambdaSequence& lambda,
                    double alpha,
                    bool intercept)
{
  DualPoint out;
  out.delta = r;
  Eigen::VectorXd shifted = grad;
  if (intercept) {
    const Eigen::RowVectorXd rbar = r.colwise().mean();
    out.delta.rowwise() -= rbar;
    for (Index f = 0; f < shifted.size(); ++f) {
      shifted(f) -= rbar(classes[static_cast<std::size_t>(f)]) * column_means(f);
    }
  }
  scale_into_ball(out, shifted, lambda, alpha);
  return out;
}

DualPoint
feasible_dual_point(const Family& family,
                    const Eigen::MatrixXd& eta,
                    const Eigen::MatrixXd& y,
                    const Eigen::MatrixXd& r,
                    const Eigen::VectorXd& grad,
                    const Eigen::VectorXd& column_means,
                    const std::vector<Index>& classes,
                    const LambdaSequence& lambda,
                    double alpha,
                    bool intercept,
                    const std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>& weighted_grad)
{
  if (intercept && family.kind() != Loss::gaussian) {
    const Eigen::RowVectorXd rbar = r.colwise().mean();
    const Eigen::MatrixXd uniform = (y + r).rowwise() - rbar;
    if (!family.in_domain(uniform, dual_domain_slack)) {
      // The mean is moved where the weights allow it, so y + delta stays a
      // valid mean; the scaling below is a convex combination with y.
      const Eigen::MatrixXd w = family.shift_weights(eta);
      DualPoint out;
      out.delta = r;
      Eigen::VectorXd shift(r.cols());
      for (Index k = 0; k < r.cols(); ++k) {
        const double w_sum = w.col(k).sum();
        shift(k) = w_sum > 0.0 ? r.col(k).sum() / w_sum : std::numeric_limits<double>::quiet_NaN();
        out.delta.col(k) -= shift(k) * w.col(k);
      }
      if (!shift.allFinite()) {
        out.delta.setConstant(std::numeric_limits<double>::quiet_NaN());
        return out;
      }
      Eigen::VectorXd shifted = grad;
      const Eigen::VectorXd wg = weighted_grad(w);
      for (Index f = 0; f < shifted.size(); ++f) {
        shifted(f) -= shift(classes[static_cast<std::size_t>(f)]) * wg(f);
      }
      scale_into_ball(out, shifted, lambda, alpha);
      return out;
    }
  }
  return feasible_dual_point(r, grad, column_means, classes, lambda, alpha, intercept);
}

DualPoint
feasible_dual_point(const MatrixView& x,
                    const Family& family,
                    const Eigen::MatrixXd& eta,
                    const Eigen::MatrixXd& y,
                    const LambdaSequence& lambda,
                    double alpha,
                    bool intercept)
{
  const Index p = x.cols();
  const Index K = eta.cols();
  if (lambda.size() != p * K) {
    throw std::invalid_argument("lambda length must equal p times the class count");
  }
  const Eigen::MatrixXd r = family.residual(eta, y);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(x.rows());
  Eigen::VectorXd means(p * K);
  std::vector<Index> classes(static_cast<std::size_t>(p * K));
  for (Index k = 0; k < K; ++k) {
    for (Index j = 0; j < p; ++j) {
      means(j + k * p) = x.column_dot(j, ones, static_cast<double>(x.rows())) / static_cast<double>(x.rows());
      classes[static_cast<std::size_t>(j + k * p)] = k;
    }
  }
  return feasible_dual_point(family, eta, y, r, view_gradient(x, r), means, classes, lambda, alpha, intercept,
                             [&](const Eigen::MatrixXd& w) { return view_gradient(x, w); });
}

double
dual_objective(const Family& family, const Eigen::MatrixXd& delta, const Eigen::MatrixXd& y)
{
  if (!delta.allFinite()) {
    return -std::numeric_limits<double>::infinity();
  }
  const Eigen::MatrixXd mu = y + delta;
  return family.dual_terms(mu, y) / static_cast<double>(y.rows());
}

double
primal_objective(const Family& family,
                 const Eigen::MatrixXd& eta,
                 const Eigen::MatrixXd& y,
                 const Eigen::VectorXd& beta_flat,
                 const LambdaSequence& lambda,
                 double alpha)
{
  const double loss = family.loss(eta, y) / static_cast<double>(y.rows());
  return loss + alpha * sorted_l1_norm(beta_flat, lambda);
}

Gap
duality_gap(double primal, double dual)
{
  Gap g;
  g.primal = primal;
  g.dual = dual;
  g.gap = primal - dual;
  if (std::isinf(dual) && dual < 0.0) {
    g.gap = std::numeric_limits<double>::infinity();
  }
  g.relative = g.gap / std::max(std::abs(primal), 1e-10);
  return g;
}

} // namespace slope
