#include "slope/sorted_l1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace slope {

namespace {

// Indices of |v| in decreasing order; ties keep their original order.
std::vector<Eigen::Index>
order_by_magnitude(const Eigen::Ref<const Eigen::VectorXd>& v)
{
  std::vector<Eigen::Index> ord(static_cast<std::size_t>(v.size()));
  std::iota(ord.begin(), ord.end(), Eigen::Index{ 0 });
  std::stable_sort(ord.begin(), ord.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(v(a)) > std::abs(v(b));
  });
  return ord;
}

void
check_length(Eigen::Index a, Eigen::Index b)
{
  if (a != b) {
    throw std::invalid_argument("vector length does not match lambda length");
  }
}

double
horner(const double* coef, int degree, double x)
{
  double acc = coef[degree];
  for (int i = degree - 1; i >= 0; --i) {
    acc = acc * x + coef[i];
  }
  return acc;
}

} // namespace

LambdaKind
parse_lambda_kind(const std::string& name)
{
  if (name == "bh") {
    return LambdaKind::bh;
  }
  if (name == "gaussian") {
    return LambdaKind::gaussian;
  }
  if (name == "oscar") {
    return LambdaKind::oscar;
  }
  if (name == "lasso") {
    return LambdaKind::lasso;
  }
  if (name == "custom") {
    return LambdaKind::custom;
  }
  throw std::invalid_argument("unknown lambda type '" + name + "'");
}

std::string
to_string(LambdaKind kind)
{
  switch (kind) {
    case LambdaKind::bh:
      return "bh";
    case LambdaKind::gaussian:
      return "gaussian";
    case LambdaKind::oscar:
      return "oscar";
    case LambdaKind::lasso:
      return "lasso";
    case LambdaKind::custom:
      return "custom";
  }
  return "custom";
}

LambdaSequence::LambdaSequence(Eigen::VectorXd values, LambdaKind kind)
  : values_(std::move(values))
  , kind_(kind)
{
  if (values_.size() == 0) {
    throw std::invalid_argument("lambda sequence must not be empty");
  }
  if (!values_.allFinite()) {
    throw std::invalid_argument("lambda values must be finite");
  }
  if (!(values_(0) > 0.0)) {
    throw std::invalid_argument("first lambda value must be positive");
  }
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (values_(i) < 0.0) {
      throw std::invalid_argument("lambda values must be non-negative");
    }
    if (i > 0 && values_(i) > values_(i - 1)) {
      throw std::invalid_argument("lambda values must be non-increasing");
    }
  }
  cumsum_.resize(values_.size() + 1);
  cumsum_(0) = 0.0;
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    cumsum_(i + 1) = cumsum_(i) + values_(i);
  }
}

LambdaSequence
LambdaSequence::prefix(Eigen::Index length) const
{
  if (length <= 0 || length > size()) {
    throw std::out_of_range("lambda prefix length out of range");
  }
  LambdaSequence out(values_.head(length), kind_);
  out.q = q;
  out.theta1 = theta1;
  out.theta2 = theta2;
  return out;
}

double
normal_quantile(double p)
{
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) {
      return -std::numeric_limits<double>::infinity();
    }
    if (p == 1.0) {
      return std::numeric_limits<double>::infinity();
    }
    throw std::domain_error("normal_quantile requires p in [0, 1]");
  }

  static constexpr double a[] = { 3.3871328727963666080e0,  1.3314166789178437745e+2,
                                  1.9715909503065514427e+3, 1.3731693765509461125e+4,
                                  4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                  3.3430575583588128105e+4, 2.5090809287301226727e+3 };
  static constexpr double b[] = { 1.0,
                                  4.2313330701600911252e+1, 6.8718700749205790830e+2,
                                  5.3941960214247511077e+3, 2.1213794301586595867e+4,
                                  3.9307895800092710610e+4, 2.8729085735721942674e+4,
                                  5.2264952788528545610e+3 };
  static constexpr double c[] = { 1.42343711074968357734e0, 4.63033784615654529590e0,
                                  5.76949722146069140550e0, 3.64784832476320460504e0,
                                  1.27045825245236838258e0, 2.41780725177450611770e-1,
                                  2.27238449892691845833e-2, 7.74545014278341407640e-4 };
  static constexpr double d[] = { 1.0,
                                  2.05319162663775882187e0, 1.67638483018380384940e0,
                                  6.89767334985100004550e-1, 1.48103976427480074590e-1,
                                  1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                  1.05075007164441684324e-9 };
  static constexpr double e[] = { 6.65790464350110377720e0, 5.46378491116411436990e0,
                                  1.78482653991729133580e0, 2.96560571828504891230e-1,
                                  2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                  2.71155556874348757815e-5, 2.01033439929228813265e-7 };
  static constexpr double f[] = { 1.0,
                                  5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                  1.48753612908506148525e-2, 7.86869131145613259100e-4,
                                  1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                  2.04426310338993978564e-15 };

  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * horner(a, 7, r) / horner(b, 7, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = horner(c, 7, r) / horner(d, 7, r);
  } else {
    r -= 5.0;
    val = horner(e, 7, r) / horner(f, 7, r);
  }
  return q < 0.0 ? -val : val;
}

LambdaSequence
make_lambda(LambdaKind kind, Eigen::Index p_total, const LambdaOptions& opt)
{
  if (p_total <= 0) {
    throw std::invalid_argument("lambda length must be positive");
  }
  const auto p = p_total;
  const double pd = static_cast<double>(p);
  Eigen::VectorXd values(p);

  auto need_q = [&] {
    if (!(opt.q > 0.0 && opt.q < 1.0)) {
      throw std::invalid_argument("q must lie in (0, 1)");
    }
  };

  switch (kind) {
    case LambdaKind::bh:
      need_q();
      for (Eigen::Index j = 0; j < p; ++j) {
        values(j) = normal_quantile(1.0 - opt.q * static_cast<double>(j + 1) / (2.0 * pd));
      }
      break;
    case LambdaKind::gaussian: {
      need_q();
      if (opt.n <= 0) {
        throw std::invalid_argument("gaussian lambda requires the sample count");
      }
      const double n = static_cast<double>(opt.n);
      double sum_sq = 0.0;
      bool flat = false;
      for (Eigen::Index j = 0; j < p; ++j) {
        const double bh = normal_quantile(1.0 - opt.q * static_cast<double>(j + 1) / (2.0 * pd));
        if (j == 0) {
          values(j) = bh;
        } else if (flat) {
          values(j) = values(j - 1);
        } else {
          const double dof = n - static_cast<double>(j + 1);
          const double candidate = dof > 0.0 ? bh * std::sqrt(1.0 + sum_sq / dof) : 0.0;
          if (dof <= 0.0 || candidate > values(j - 1)) {
            flat = true;
            values(j) = values(j - 1);
          } else {
            values(j) = candidate;
          }
        }
        sum_sq += values(j) * values(j);
      }
      break;
    }
    case LambdaKind::oscar:
      if (opt.theta1 < 0.0 || opt.theta2 < 0.0 || (opt.theta1 == 0.0 && opt.theta2 == 0.0)) {
        throw std::invalid_argument("oscar requires theta1, theta2 >= 0, not both zero");
      }
      for (Eigen::Index j = 0; j < p; ++j) {
        values(j) = opt.theta1 + opt.theta2 * static_cast<double>(p - (j + 1));
      }
      break;
    case LambdaKind::lasso:
      values.setOnes();
      break;
    case LambdaKind::custom:
      throw std::invalid_argument("custom lambda sequences are supplied explicitly");
  }

  LambdaSequence out(std::move(values), kind);
  out.q = opt.q;
  out.theta1 = opt.theta1;
  out.theta2 = opt.theta2;
  return out;
}

double
sorted_l1_norm(const Eigen::Ref<const Eigen::VectorXd>& beta, const LambdaSequence& lambda)
{
  check_length(beta.size(), lambda.size());
  Eigen::VectorXd mag = beta.cwiseAbs();
  std::sort(mag.data(), mag.data() + mag.size(), std::greater<>());
  return mag.dot(lambda.values());
}

double
dual_norm(const Eigen::Ref<const Eigen::VectorXd>& z, const LambdaSequence& lambda)
{
  check_length(z.size(), lambda.size());
  Eigen::VectorXd mag = z.cwiseAbs();
  std::sort(mag.data(), mag.data() + mag.size(), std::greater<>());
  double running = 0.0;
  double best = 0.0;
  for (Eigen::Index j = 0; j < mag.size(); ++j) {
    running += mag(j);
    best = std::max(best, running / lambda.cumsum(j + 1));
  }
  return best;
}

Eigen::VectorXd
prox(const Eigen::Ref<const Eigen::VectorXd>& v,
     const LambdaSequence& lambda,
     double alpha,
     double step)
{
  check_length(v.size(), lambda.size());
  if (!(step > 0.0)) {
    throw std::invalid_argument("prox step must be positive");
  }
  const auto p = v.size();
  const double shrink = alpha * step;
  const auto ord = order_by_magnitude(v);

  struct Block
  {
    Eigen::Index start;
    Eigen::Index end; // inclusive
    double sum;
    double mean;
  };
  std::vector<Block> stack;
  stack.reserve(static_cast<std::size_t>(p));

  for (Eigen::Index i = 0; i < p; ++i) {
    const double w = std::abs(v(ord[static_cast<std::size_t>(i)])) - shrink * lambda[i];
    stack.push_back({ i, i, w, w });
    while (stack.size() > 1 && stack[stack.size() - 2].mean <= stack.back().mean) {
      const Block top = stack.back();
      stack.pop_back();
      Block& below = stack.back();
      below.end = top.end;
      below.sum += top.sum;
      below.mean = below.sum / static_cast<double>(below.end - below.start + 1);
    }
  }

  Eigen::VectorXd out(p);
  for (const auto& block : stack) {
    const double value = std::max(block.mean, 0.0);
    for (Eigen::Index i = block.start; i <= block.end; ++i) {
      const auto j = ord[static_cast<std::size_t>(i)];
      out(j) = v(j) < 0.0 ? -value : value;
    }
  }
  return out;
}

ThresholdResult
slope_threshold(double v,
                double xi,
                int k,
                const Clusters& clusters,
                const LambdaSequence& lambda,
                double alpha)
{
  if (!(xi > 0.0)) {
    throw std::invalid_argument("thresholding curvature must be positive");
  }
  if (k < 0 || k >= clusters.size()) {
    throw std::out_of_range("cluster index out of range");
  }

  const auto& c = clusters.c();
  const auto& ptr = clusters.c_ptr();
  const int s = clusters.cluster_size(k);
  const bool k_nonzero = c[static_cast<std::size_t>(k)] > 0.0;
  // slots u = 0..n_others; slot u lies below the first u other clusters
  const int n_others = k_nonzero ? clusters.n_nonzero() - 1 : clusters.n_nonzero();

  auto other = [k](int u) { return u < k ? u : u + 1; };
  auto rank_start = [&](int u) -> Eigen::Index {
    if (u == 0) {
      return 0;
    }
    const int o = other(u - 1);
    const int end = ptr[static_cast<std::size_t>(o) + 1];
    return o > k ? end - s : end;
  };
  auto candidate = [&](int u) {
    return (v - alpha * lambda.window(rank_start(u), s)) / xi;
  };
  auto magnitude = [&](int o) { return c[static_cast<std::size_t>(o)]; };

  int u = k;
  while (true) {
    const double z = candidate(u);
    if (u > 0 && z >= magnitude(other(u - 1))) {
      const double bound = magnitude(other(u - 1));
      if (candidate(u - 1) <= bound) {
        return { bound, other(u - 1) };
      }
      --u;
      continue;
    }
    const double lower = u < n_others ? magnitude(other(u)) : 0.0;
    if (z <= lower) {
      if (u == n_others) {
        const int zero = clusters.zero_cluster();
        if (zero >= 0 && zero != k) {
          return { 0.0, zero };
        }
        return { 0.0, std::nullopt };
      }
      if (candidate(u + 1) >= lower) {
        return { lower, other(u) };
      }
      ++u;
      continue;
    }
    return { z, std::nullopt };
  }
}

} // namespace slope
