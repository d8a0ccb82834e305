#pragma once

#include "slope/losses.hpp"
#include "slope/sorted_l1.hpp"

#include <functional>

namespace slope {

/// Dual variable on the residual scale: the dual mean is y + delta.
struct DualPoint
{
  Eigen::MatrixXd delta; // n x K
  /// Factor the centered residual was divided by (>= 1).
  double scale = 1.0;
};

/// Centers r per class (when an intercept is fit) and rescales it so that
/// J*_lambda((1/n) X^T delta) <= alpha.
DualPoint
feasible_dual_point(const MatrixView& x,
                    const Eigen::MatrixXd& r,
                    const LambdaSequence& lambda,
                    double alpha,
                    bool intercept);

/// Same construction from a precomputed gradient. `grad` holds (1/n) X_j^T r_k
/// and `column_means` (1/n) X_j^T 1 for the flattened coefficients the
/// penalty ranges over (index j + k p); `lambda` must match their count.
DualPoint
feasible_dual_point(const Eigen::MatrixXd& r,
                    const Eigen::VectorXd& grad,
                    const Eigen::VectorXd& column_means,
                    const std::vector<Index>& classes,
                    const LambdaSequence& lambda,
                    double alpha,
                    bool intercept);

/// Domain-aware construction. With an intercept, the residual mean is
/// removed uniformly when y + delta stays a valid mean; otherwise it is
/// removed in proportion to Family::shift_weights(eta), and
/// `weighted_grad(w)` must return (1/n) X_j^T w_k in the layout of `grad`.
/// The result is NaN when no weight mass is available.
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
                    const std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>& weighted_grad);

/// Domain-aware construction at the fitted predictor eta.
DualPoint
feasible_dual_point(const MatrixView& x,
                    const Family& family,
                    const Eigen::MatrixXd& eta,
                    const Eigen::MatrixXd& y,
                    const LambdaSequence& lambda,
                    double alpha,
                    bool intercept);

/// D(delta) = (1/n) sum_i [f(g(mu_i), y_i) - delta_i g(mu_i)], mu = y + delta.
/// Returns -infinity when mu is outside the family's domain.
double
dual_objective(const Family& family, const Eigen::MatrixXd& delta, const Eigen::MatrixXd& y);

/// (1/n) sum_i f(eta_i, y_i) + alpha J_lambda(vec(beta)).
double
primal_objective(const Family& family,
                 const Eigen::MatrixXd& eta,
                 const Eigen::MatrixXd& y,
                 const Eigen::VectorXd& beta_flat,
                 const LambdaSequence& lambda,
                 double alpha);

struct Gap
{
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double relative = 0.0;
};

Gap
duality_gap(double primal, double dual);

} // namespace slope
