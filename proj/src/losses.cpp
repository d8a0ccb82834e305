#include "slope/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace slope {

namespace {

constexpr double mu_floor = 1e-10;

// log(1 + sum_k exp(eta_k)) with the implicit reference predictor 0. The
// largest term is factored out and excluded from the log1p argument so that
// the K = 1 case reduces to the usual softplus evaluation.
double
log_partition(const double* eta, Index k)
{
  double top = 0.0;
  Index arg = -1;
  for (Index c = 0; c < k; ++c) {
    if (eta[c] > top) {
      top = eta[c];
      arg = c;
    }
  }
  double rest = arg >= 0 ? std::exp(-top) : 0.0;
  for (Index c = 0; c < k; ++c) {
    if (c != arg) {
      rest += std::exp(eta[c] - top);
    }
  }
  return top + std::log1p(rest);
}

double
xlogx(double x)
{
  return x > 0.0 ? x * std::log(x) : 0.0;
}

double
clamp_eta(double eta)
{
  return std::clamp(eta, -eta_clamp, eta_clamp);
}

// Negative entropy of the categorical distribution (mu_1..mu_K, 1 - sum mu).
double
categorical_neg_entropy(const double* mu, Index k, bool clamp)
{
  double total = 0.0;
  double rest = 1.0;
  for (Index c = 0; c < k; ++c) {
    const double m = clamp ? std::clamp(mu[c], 0.0, 1.0) : mu[c];
    total += xlogx(m);
    rest -= m;
  }
  if (clamp) {
    rest = std::clamp(rest, 0.0, 1.0);
  }
  return total + xlogx(std::max(rest, 0.0));
}

Eigen::RowVectorXd
row_copy(const Eigen::MatrixXd& m, Index i)
{
  return m.row(i);
}

} // namespace

Loss
parse_loss(const std::string& name)
{
  if (name == "gaussian" || name == "quadratic") {
    return Loss::gaussian;
  }
  if (name == "binomial" || name == "logistic") {
    return Loss::binomial;
  }
  if (name == "poisson") {
    return Loss::poisson;
  }
  if (name == "multinomial") {
    return Loss::multinomial;
  }
  throw std::invalid_argument("unknown loss '" + name + "'");
}

std::string
to_string(Loss loss)
{
  switch (loss) {
    case Loss::gaussian:
      return "gaussian";
    case Loss::binomial:
      return "binomial";
    case Loss::poisson:
      return "poisson";
    case Loss::multinomial:
      return "multinomial";
  }
  return "unknown";
}

double
loss_value(Loss kind, double eta, double y)
{
  switch (kind) {
    case Loss::gaussian:
      return 0.5 * (y - eta) * (y - eta);
    case Loss::binomial:
    case Loss::multinomial:
      return log_partition(&eta, 1) - eta * y;
    case Loss::poisson:
      return std::exp(clamp_eta(eta)) - eta * y;
  }
  return 0.0;
}

double
residual(Loss kind, double eta, double y)
{
  switch (kind) {
    case Loss::gaussian:
      return eta - y;
    case Loss::binomial:
    case Loss::multinomial:
      return std::exp(eta - log_partition(&eta, 1)) - y;
    case Loss::poisson:
      return std::exp(clamp_eta(eta)) - y;
  }
  return 0.0;
}

double
hessian_weight(Loss kind, double eta, double /*y*/)
{
  double w = 1.0;
  switch (kind) {
    case Loss::gaussian:
      return 1.0;
    case Loss::binomial:
    case Loss::multinomial: {
      const double mu = std::exp(eta - log_partition(&eta, 1));
      w = mu * (1.0 - mu);
      break;
    }
    case Loss::poisson:
      w = std::exp(clamp_eta(eta));
      break;
  }
  return std::max(w, weight_floor);
}

double
multinomial_loss(const Eigen::Ref<const Eigen::RowVectorXd>& eta,
                 const Eigen::Ref<const Eigen::RowVectorXd>& y)
{
  const Eigen::RowVectorXd e = eta;
  double linear = 0.0;
  for (Index c = 0; c < e.size(); ++c) {
    linear += e(c) * y(c);
  }
  return log_partition(e.data(), e.size()) - linear;
}

Eigen::RowVectorXd
multinomial_mean(const Eigen::Ref<const Eigen::RowVectorXd>& eta)
{
  const Eigen::RowVectorXd e = eta;
  const double lse = log_partition(e.data(), e.size());
  Eigen::RowVectorXd mu(e.size());
  for (Index c = 0; c < e.size(); ++c) {
    mu(c) = std::exp(e(c) - lse);
  }
  return mu;
}

Family::Family(Loss kind, int n_classes)
  : kind_(kind)
  , classes_(1)
  , responses_(1)
{
  if (kind == Loss::multinomial) {
    if (n_classes < 2) {
      throw std::invalid_argument("multinomial requires at least two classes");
    }
    classes_ = n_classes;
    responses_ = n_classes - 1;
  }
}

void
Family::validate(const Eigen::MatrixXd& y) const
{
  if (y.cols() != responses_) {
    throw DataError("response has wrong number of columns");
  }
  if (!y.allFinite()) {
    throw DataError("response contains non-finite values");
  }
  switch (kind_) {
    case Loss::gaussian:
      break;
    case Loss::binomial:
      if (((y.array() != 0.0) && (y.array() != 1.0)).any()) {
        throw DataError("binomial response must be 0 or 1");
      }
      break;
    case Loss::poisson:
      if ((y.array() < 0.0).any()) {
        throw DataError("poisson response must be non-negative");
      }
      break;
    case Loss::multinomial:
      if (((y.array() != 0.0) && (y.array() != 1.0)).any() ||
          (y.rowwise().sum().array() > 1.0).any()) {
        throw DataError("multinomial response must be one-hot");
      }
      break;
  }
}

double
Family::loss(const Eigen::MatrixXd& eta, const Eigen::MatrixXd& y) const
{
  double total = 0.0;
  if (kind_ == Loss::multinomial) {
    for (Index i = 0; i < eta.rows(); ++i) {
      total += multinomial_loss(eta.row(i), y.row(i));
    }
    return total;
  }
  for (Index i = 0; i < eta.rows(); ++i) {
    total += loss_value(kind_, eta(i, 0), y(i, 0));
  }
  return total;
}

Eigen::MatrixXd
Family::mean(const Eigen::MatrixXd& eta) const
{
  Eigen::MatrixXd mu(eta.rows(), eta.cols());
  switch (kind_) {
    case Loss::gaussian:
      return eta;
    case Loss::poisson:
      for (Index i = 0; i < eta.rows(); ++i) {
        mu(i, 0) = std::exp(clamp_eta(eta(i, 0)));
      }
      return mu;
    case Loss::binomial:
    case Loss::multinomial:
      for (Index i = 0; i < eta.rows(); ++i) {
        mu.row(i) = multinomial_mean(eta.row(i));
      }
      return mu;
  }
  return mu;
}

Eigen::MatrixXd
Family::residual(const Eigen::MatrixXd& eta, const Eigen::MatrixXd& y) const
{
  return mean(eta) - y;
}

Eigen::MatrixXd
Family::hessian_weight(const Eigen::MatrixXd& eta, const Eigen::MatrixXd& /*y*/) const
{
  Eigen::MatrixXd w(eta.rows(), eta.cols());
  switch (kind_) {
    case Loss::gaussian:
      w.setOnes();
      return w;
    case Loss::poisson:
      for (Index i = 0; i < eta.rows(); ++i) {
        w(i, 0) = std::max(std::exp(clamp_eta(eta(i, 0))), weight_floor);
      }
      return w;
    case Loss::binomial:
    case Loss::multinomial: {
      const Eigen::MatrixXd mu = mean(eta);
      w = (mu.array() * (1.0 - mu.array())).max(weight_floor);
      return w;
    }
  }
  return w;
}

bool
Family::in_domain(const Eigen::MatrixXd& mu, double slack) const
{
  switch (kind_) {
    case Loss::gaussian:
      return mu.allFinite();
    case Loss::poisson:
      return (mu.array() >= -slack).all();
    case Loss::binomial:
    case Loss::multinomial:
      for (Index i = 0; i < mu.rows(); ++i) {
        if (!(mu.row(i).minCoeff() >= -slack && mu.row(i).sum() <= 1.0 + slack)) {
          return false;
        }
      }
      return true;
  }
  return false;
}

Eigen::MatrixXd
Family::shift_weights(const Eigen::MatrixXd& eta) const
{
  switch (kind_) {
    case Loss::gaussian:
      return Eigen::MatrixXd::Ones(eta.rows(), eta.cols());
    case Loss::poisson:
      return mean(eta);
    case Loss::binomial:
    case Loss::multinomial: {
      // mu_k times the reference probability, which is formed from eta so
      // that it stays positive when the modeled classes round to 1
      Eigen::MatrixXd w = mean(eta);
      for (Index i = 0; i < eta.rows(); ++i) {
        const Eigen::RowVectorXd row = eta.row(i);
        w.row(i) *= std::exp(-log_partition(row.data(), row.size()));
      }
      return w;
    }
  }
  return Eigen::MatrixXd::Ones(eta.rows(), eta.cols());
}

double
Family::bregman(const Eigen::MatrixXd& eta, const Eigen::MatrixXd& delta) const
{
  constexpr double taylor_below = 1e-3;
  double total = 0.0;
  switch (kind_) {
    case Loss::gaussian:
      return 0.5 * delta.squaredNorm();
    case Loss::poisson:
      for (Index i = 0; i < eta.rows(); ++i) {
        const double e = eta(i, 0);
        const double d = delta(i, 0);
        if (std::abs(e) > eta_clamp || std::abs(e + d) > eta_clamp) {
          total += loss_value(kind_, e + d, 0.0) - loss_value(kind_, e, 0.0) - slope::residual(kind_, e, 0.0) * d;
          continue;
        }
        const double excess = std::abs(d) < taylor_below
                                ? d * d * (0.5 + d * (1.0 / 6 + d * (1.0 / 24 + d / 120)))
                                : std::expm1(d) - d;
        total += std::exp(e) * excess;
      }
      return total;
    case Loss::binomial:
    case Loss::multinomial:
      for (Index i = 0; i < eta.rows(); ++i) {
        const Eigen::RowVectorXd mu = multinomial_mean(eta.row(i));
        const auto d = delta.row(i);
        // cumulants of Z = d_k with probability mu_k, 0 for the reference class
        double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0, big = 0.0, shifted = 0.0;
        for (Index c = 0; c < mu.size(); ++c) {
          const double dc = d(c);
          m1 += mu(c) * dc;
          m2 += mu(c) * dc * dc;
          m3 += mu(c) * dc * dc * dc;
          m4 += mu(c) * dc * dc * dc * dc;
          big = std::max(big, std::abs(dc));
          shifted += mu(c) * std::expm1(dc);
        }
        if (big < taylor_below) {
          const double k2 = m2 - m1 * m1;
          const double k3 = m3 - 3 * m1 * m2 + 2 * m1 * m1 * m1;
          const double k4 = m4 - 4 * m3 * m1 - 3 * m2 * m2 + 12 * m2 * m1 * m1 - 6 * m1 * m1 * m1 * m1;
          total += k2 / 2 + k3 / 6 + k4 / 24;
        } else if (big < 30.0) {
          total += std::log1p(shifted) - m1;
        } else {
          const Eigen::RowVectorXd moved = eta.row(i) + d;
          total += log_partition(moved.data(), moved.size()) -
                   log_partition(eta.row(i).eval().data(), eta.cols()) - m1;
        }
      }
      return total;
  }
  return total;
}

double
Family::dual_terms(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& y) const
{
  double total = 0.0;
  switch (kind_) {
    case Loss::gaussian:
      return 0.5 * (y.squaredNorm() - mu.squaredNorm());
    case Loss::poisson:
      for (Index i = 0; i < mu.rows(); ++i) {
        if (!(mu(i, 0) >= -dual_domain_slack)) {
          return -std::numeric_limits<double>::infinity();
        }
        const double m = std::max(mu(i, 0), 0.0);
        total += m - xlogx(m);
      }
      return total;
    case Loss::binomial:
    case Loss::multinomial:
      for (Index i = 0; i < mu.rows(); ++i) {
        const Eigen::RowVectorXd row = row_copy(mu, i);
        if (!(row.minCoeff() >= -dual_domain_slack && row.sum() <= 1.0 + dual_domain_slack)) {
          return -std::numeric_limits<double>::infinity();
        }
        total -= categorical_neg_entropy(row.data(), row.size(), true);
      }
      return total;
  }
  return total;
}

double
Family::saturated_loss(const Eigen::MatrixXd& y) const
{
  double total = 0.0;
  switch (kind_) {
    case Loss::gaussian:
      return 0.0;
    case Loss::poisson:
      for (Index i = 0; i < y.rows(); ++i) {
        total += y(i, 0) - xlogx(y(i, 0));
      }
      return total;
    case Loss::binomial:
    case Loss::multinomial:
      for (Index i = 0; i < y.rows(); ++i) {
        const Eigen::RowVectorXd row = row_copy(y, i);
        total -= categorical_neg_entropy(row.data(), row.size(), false);
      }
      return total;
  }
  return total;
}

Eigen::VectorXd
Family::null_intercept(const Eigen::MatrixXd& y) const
{
  const Eigen::VectorXd ybar = y.colwise().mean().transpose();
  Eigen::VectorXd out(ybar.size());
  switch (kind_) {
    case Loss::gaussian:
      return ybar;
    case Loss::poisson:
      out(0) = std::log(std::max(ybar(0), mu_floor));
      return out;
    case Loss::binomial:
    case Loss::multinomial: {
      const double reference =
        std::clamp(1.0 - ybar.sum(), mu_floor, 1.0 - mu_floor);
      for (Index c = 0; c < ybar.size(); ++c) {
        const double m = std::clamp(ybar(c), mu_floor, 1.0 - mu_floor);
        out(c) = std::log(m) - std::log(reference);
      }
      return out;
    }
  }
  return out;
}

Eigen::MatrixXd
working_response(const Eigen::MatrixXd& eta,
                 const Eigen::MatrixXd& r,
                 const Eigen::MatrixXd& w)
{
  return eta.array() - r.array() / w.array();
}

Eigen::MatrixXd
one_hot(const Eigen::VectorXd& labels, int n_classes)
{
  if (n_classes < 2) {
    throw std::invalid_argument("one_hot requires at least two classes");
  }
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(labels.size(), n_classes - 1);
  for (Index i = 0; i < labels.size(); ++i) {
    const double l = labels(i);
    if (l < 0 || l >= n_classes || l != std::floor(l)) {
      throw DataError("class label out of range");
    }
    if (l < n_classes - 1) {
      y(i, static_cast<Index>(l)) = 1.0;
    }
  }
  return y;
}

Eigen::MatrixXd
make_response(Loss kind, const Eigen::VectorXd& y, int& classes)
{
  classes = 1;
  if (kind != Loss::multinomial) {
    Eigen::MatrixXd out = y;
    Family(kind).validate(out);
    return out;
  }
  std::map<double, int> levels;
  for (Index i = 0; i < y.size(); ++i) {
    levels.emplace(y(i), 0);
  }
  if (levels.size() < 2) {
    throw DataError("multinomial response needs at least two classes");
  }
  int next = 0;
  for (auto& [value, code] : levels) {
    code = next++;
  }
  Eigen::VectorXd codes(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    codes(i) = levels.at(y(i));
  }
  classes = static_cast<int>(levels.size());
  return one_hot(codes, classes);
}

Gradient
gradient(const MatrixView& x,
         const Family& family,
         const Eigen::MatrixXd& beta,
         const Eigen::VectorXd& beta0,
         const Eigen::MatrixXd& y)
{
  if (y.rows() != x.rows() || y.cols() != family.responses()) {
    throw std::invalid_argument("response dimensions do not match");
  }
  const Eigen::MatrixXd eta = linear_predictor(x, beta, beta0);
  const Eigen::MatrixXd r = family.residual(eta, y);
  const double n = static_cast<double>(x.rows());

  Gradient g;
  g.beta.resize(x.cols(), r.cols());
  g.beta0 = r.colwise().mean().transpose();
  for (Index k = 0; k < r.cols(); ++k) {
    const double r_sum = r.col(k).sum();
    for (Index j = 0; j < x.cols(); ++j) {
      g.beta(j, k) = x.column_dot(j, r.col(k), r_sum) / n;
    }
  }
  return g;
}

double
deviance(const Family& family, const Eigen::MatrixXd& eta, const Eigen::MatrixXd& y)
{
  return 2.0 * (family.loss(eta, y) - family.saturated_loss(y));
}

double
null_deviance(const Family& family, const Eigen::MatrixXd& y, bool intercept)
{
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(y.rows(), y.cols());
  if (intercept) {
    const Eigen::VectorXd b0 = family.null_intercept(y);
    eta.rowwise() = b0.transpose();
  }
  return deviance(family, eta, y);
}

} // namespace slope
