#pragma once

#include "slope/matrix.hpp"

#include <string>

namespace slope {

enum class Loss
{
  gaussian,
  binomial,
  poisson,
  multinomial
};

Loss
parse_loss(const std::string& name);

std::string
to_string(Loss loss);

/// Linear predictors are clamped to this range before exponentiation.
inline constexpr double eta_clamp = 500.0;
/// Dual means this far outside the domain are treated as rounding error;
/// further out, the dual value is -infinity. An infeasible mean can raise the
/// dual value by about the violation times |eta|.
inline constexpr double dual_domain_slack = 1e-12;
/// Lower bound for IRLS weights.
inline constexpr double weight_floor = 1e-10;

/// GLM loss family. Responses and linear predictors are n x K matrices where
/// K = 1 for univariate families and K = m - 1 for multinomial with m classes;
/// the last class is the implicit reference.
class Family
{
public:
  explicit Family(Loss kind, int n_classes = 0);

  Loss kind() const { return kind_; }
  /// Number of response classes m (1 for univariate families).
  int classes() const { return classes_; }
  /// Number of modeled linear predictors K.
  int responses() const { return responses_; }

  /// Throws DataError when y is not a valid response for this family.
  void validate(const Eigen::MatrixXd& y) const;

  /// Sum over samples of f(eta_i, y_i).
  double loss(const Eigen::MatrixXd& eta, const Eigen::MatrixXd& y) const;
  /// Inverse link g^{-1}(eta).
  Eigen::MatrixXd mean(const Eigen::MatrixXd& eta) const;
  /// Generalized residual g^{-1}(eta) - y.
  Eigen::MatrixXd residual(const Eigen::MatrixXd& eta,
                           const Eigen::MatrixXd& y) const;
  /// Diagonal of the Hessian of f in eta, floored at weight_floor.
  Eigen::MatrixXd hessian_weight(const Eigen::MatrixXd& eta,
                                 const Eigen::MatrixXd& y) const;

  /// Sum over samples of f(g(mu_i), y_i) - (mu_i - y_i) g(mu_i); this is the
  /// per-sample dual term with mu = y + delta. Means within rounding of the
  /// domain are clamped into it; others give -infinity.
  double dual_terms(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& y) const;

  /// True when every row of mu is a valid mean, up to `slack`.
  bool in_domain(const Eigen::MatrixXd& mu, double slack = 0.0) const;

  /// Nonnegative weights w with g^{-1}(eta) - t w inside the domain for every
  /// |t| < 1, taken jointly over the classes of a row. Used to recenter a
  /// residual without leaving the dual domain.
  Eigen::MatrixXd shift_weights(const Eigen::MatrixXd& eta) const;

  /// Sum over samples of f(eta + delta) - f(eta) - r(eta) delta, the excess
  /// of the loss over its linearization. The response cancels. Small steps
  /// use a Taylor expansion so the result keeps its relative accuracy.
  double bregman(const Eigen::MatrixXd& eta, const Eigen::MatrixXd& delta) const;

  /// Sum over samples of the saturated loss min_eta f(eta, y_i).
  double saturated_loss(const Eigen::MatrixXd& y) const;

  /// Minimizer of the loss over a constant predictor (intercept-only MLE).
  Eigen::VectorXd null_intercept(const Eigen::MatrixXd& y) const;

private:
  Loss kind_;
  int classes_;
  int responses_;
};

double
loss_value(Loss kind, double eta, double y);

double
residual(Loss kind, double eta, double y);

double
hessian_weight(Loss kind, double eta, double y);

/// Multinomial loss for one sample: log(1 + sum_k e^{eta_k}) - sum_k y_k eta_k.
double
multinomial_loss(const Eigen::Ref<const Eigen::RowVectorXd>& eta,
                 const Eigen::Ref<const Eigen::RowVectorXd>& y);

/// Class probabilities of the modeled classes for one sample.
Eigen::RowVectorXd
multinomial_mean(const Eigen::Ref<const Eigen::RowVectorXd>& eta);

/// z = eta - r / w
Eigen::MatrixXd
working_response(const Eigen::MatrixXd& eta,
                 const Eigen::MatrixXd& r,
                 const Eigen::MatrixXd& w);

/// One-hot encoding of integer labels 0..m-1 over the first m - 1 classes.
Eigen::MatrixXd
one_hot(const Eigen::VectorXd& labels, int n_classes);

/// Response matrix for the family; multinomial maps distinct labels, in
/// ascending order, to classes 0..m-1. Returns the class count via `classes`.
Eigen::MatrixXd
make_response(Loss kind, const Eigen::VectorXd& y, int& classes);

/// Gradient of F(beta0, beta) = (1/n) sum f(eta_i, y_i).
struct Gradient
{
  Eigen::MatrixXd beta;   // p x K
  Eigen::VectorXd beta0;  // K
};

Gradient
gradient(const MatrixView& x,
         const Family& family,
         const Eigen::MatrixXd& beta,
         const Eigen::VectorXd& beta0,
         const Eigen::MatrixXd& y);

/// 2 n (F(eta) - F(saturated)) with F the mean loss.
double
deviance(const Family& family, const Eigen::MatrixXd& eta, const Eigen::MatrixXd& y);

/// Deviance of the intercept-only model (or of eta = 0 without intercept).
double
null_deviance(const Family& family, const Eigen::MatrixXd& y, bool intercept);

} // namespace slope
