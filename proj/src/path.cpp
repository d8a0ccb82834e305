#include "slope/path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace slope {

namespace {

Eigen::VectorXd
flatten(const Eigen::MatrixXd& beta)
{
  return Eigen::Map<const Eigen::VectorXd>(beta.data(), beta.size());
}

std::vector<Index>
order_by_magnitude(const Eigen::VectorXd& v, const std::vector<Index>& subset)
{
  std::vector<Index> ord = subset;
  std::stable_sort(ord.begin(), ord.end(), [&](Index a, Index b) {
    return std::abs(v(a)) > std::abs(v(b));
  });
  return ord;
}

std::vector<Index>
merge_sorted(const std::vector<Index>& a, const std::vector<Index>& b)
{
  std::vector<Index> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

} // namespace

std::string
to_string(Termination reason)
{
  switch (reason) {
    case Termination::completed:
      return "completed";
    case Termination::dev_plateau:
      return "dev_plateau";
    case Termination::dev_saturated:
      return "dev_saturated";
    case Termination::cluster_limit:
      return "cluster_limit";
  }
  return "completed";
}

Eigen::VectorXd
flat_gradient(const MatrixView& x,
              const Family& family,
              const Eigen::MatrixXd& y,
              const Eigen::MatrixXd& beta,
              const Eigen::VectorXd& beta0)
{
  return flatten(gradient(x, family, beta, beta0, y).beta);
}

double
alpha_max(const MatrixView& x,
          const Family& family,
          const Eigen::MatrixXd& y,
          const LambdaSequence& lambda,
          bool intercept)
{
  const Index K = family.responses();
  if (lambda.size() != x.cols() * K) {
    throw std::invalid_argument("lambda length must equal p times the class count");
  }
  const Eigen::VectorXd beta0 =
    intercept ? family.null_intercept(y) : Eigen::VectorXd::Zero(K).eval();
  const Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(x.cols(), K);
  return dual_norm(flat_gradient(x, family, y, beta, beta0), lambda);
}

std::vector<double>
alpha_grid(double amax, int length, double ratio)
{
  if (length < 1) {
    throw std::invalid_argument("path length must be at least 1");
  }
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("alpha_min_ratio must lie in (0, 1)");
  }
  std::vector<double> grid(static_cast<std::size_t>(length));
  if (length == 1) {
    grid[0] = amax;
    return grid;
  }
  const double log_ratio = std::log(ratio);
  for (int k = 0; k < length; ++k) {
    grid[static_cast<std::size_t>(k)] =
      amax * std::exp(log_ratio * static_cast<double>(k) / static_cast<double>(length - 1));
  }
  grid.front() = amax;
  grid.back() = amax * ratio;
  return grid;
}

std::vector<Index>
strong_set(const Eigen::VectorXd& gradient,
           const Eigen::VectorXd& beta,
           const LambdaSequence& lambda,
           double alpha_new,
           double alpha_prev)
{
  const Index m = gradient.size();
  if (beta.size() != m || lambda.size() != m) {
    throw std::invalid_argument("strong_set dimension mismatch");
  }
  std::vector<Index> all(static_cast<std::size_t>(m));
  std::iota(all.begin(), all.end(), Index{ 0 });
  const auto ord = order_by_magnitude(gradient, all);

  const double scale = 2.0 * alpha_new - alpha_prev;
  Index keep = 0;
  double running = 0.0;
  for (Index i = 0; i < m; ++i) {
    running += std::abs(gradient(ord[static_cast<std::size_t>(i)])) - scale * lambda[i];
    if (running >= 0.0) {
      keep = i + 1;
      running = 0.0;
    }
  }
  std::vector<Index> out(ord.begin(), ord.begin() + keep);
  for (Index f = 0; f < m; ++f) {
    if (beta(f) != 0.0) {
      out.push_back(f);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Index>
kkt_violations(const Eigen::VectorXd& gradient,
               const Eigen::VectorXd& beta,
               const LambdaSequence& lambda,
               double alpha,
               double tolerance)
{
  const Index m = gradient.size();
  if (beta.size() != m || lambda.size() != m) {
    throw std::invalid_argument("kkt_violations dimension mismatch");
  }
  std::vector<Index> zeros;
  for (Index f = 0; f < m; ++f) {
    if (beta(f) == 0.0) {
      zeros.push_back(f);
    }
  }
  const Index s = m - static_cast<Index>(zeros.size());
  const auto ord = order_by_magnitude(gradient, zeros);

  Index last = 0;
  double excess = 0.0;
  for (Index i = 0; i < static_cast<Index>(ord.size()); ++i) {
    excess += std::abs(gradient(ord[static_cast<std::size_t>(i)])) - alpha * lambda[s + i];
    const double budget = alpha * lambda.window(s, i + 1);
    if (excess > tolerance * std::max(1.0, budget)) {
      last = i + 1;
    }
  }
  std::vector<Index> out(ord.begin(), ord.begin() + last);
  std::sort(out.begin(), out.end());
  return out;
}

FitResult
relax_fit(const MatrixView& x,
          const Family& family,
          const Eigen::MatrixXd& y,
          const FitResult& fit,
          const LambdaSequence& lambda,
          double gamma,
          const SolverConfig& config)
{
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in [0, 1]");
  }
  if (gamma == 1.0) {
    return fit;
  }
  const Index n = x.rows();
  const Index p = x.cols();
  const Index K = family.responses();
  const auto& clusters = fit.clusters;
  const int C = clusters.n_nonzero();

  FitResult out = fit;
  if (C >= n) {
    out.relax_fallback = true;
    return out;
  }

  const bool intercept = config.intercept;
  const int q = C + (intercept ? static_cast<int>(K) : 0);
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::VectorXd beta_flat = flatten(fit.beta);

  // one n x K design block per free parameter: clusters, then intercepts
  std::vector<Eigen::MatrixXd> design(static_cast<std::size_t>(q), Eigen::MatrixXd::Zero(n, K));
  Eigen::VectorXd theta(q);
  for (int c = 0; c < C; ++c) {
    for (const int f : clusters.indices(c)) {
      const double sign = beta_flat(f) > 0.0 ? 1.0 : -1.0;
      x.add_column(f % p, sign, design[static_cast<std::size_t>(c)].col(f / p));
    }
    theta(c) = clusters.coeff(c);
  }
  if (intercept) {
    for (Index k = 0; k < K; ++k) {
      design[static_cast<std::size_t>(C + k)].col(k).setOnes();
      theta(C + k) = fit.beta0(k);
    }
  }
  const Eigen::VectorXd fixed_beta0 = intercept ? Eigen::VectorXd::Zero(K).eval() : fit.beta0;

  auto predictor = [&](const Eigen::VectorXd& th) {
    Eigen::MatrixXd eta(n, K);
    eta.rowwise() = fixed_beta0.transpose();
    for (int a = 0; a < q; ++a) {
      eta += th(a) * design[static_cast<std::size_t>(a)];
    }
    return eta;
  };

  Eigen::MatrixXd eta = predictor(theta);
  double loss = family.loss(eta, y) * inv_n;
  std::vector<Eigen::MatrixXd> weighted(static_cast<std::size_t>(q));
  for (int iter = 0; iter < 100 && q > 0; ++iter) {
    const Eigen::MatrixXd mu = family.mean(eta);
    const Eigen::MatrixXd r = mu - y;
    Eigen::VectorXd grad(q);
    for (int a = 0; a < q; ++a) {
      grad(a) = design[static_cast<std::size_t>(a)].cwiseProduct(r).sum() * inv_n;
    }
    if (grad.lpNorm<Eigen::Infinity>() < 1e-13) {
      break;
    }

    // weighted(a)[i, :] = A_a[i, :] * W_i with W_i the per-sample Hessian in eta
    Eigen::MatrixXd w;
    if (family.kind() != Loss::multinomial) {
      w = family.hessian_weight(eta, y);
    }
    for (int a = 0; a < q; ++a) {
      const auto& A = design[static_cast<std::size_t>(a)];
      if (family.kind() == Loss::multinomial) {
        const Eigen::VectorXd dot = mu.cwiseProduct(A).rowwise().sum();
        weighted[static_cast<std::size_t>(a)] =
          mu.cwiseProduct(A) - (mu.array().colwise() * dot.array()).matrix();
      } else {
        weighted[static_cast<std::size_t>(a)] = A.cwiseProduct(w);
      }
    }
    Eigen::MatrixXd H(q, q);
    for (int a = 0; a < q; ++a) {
      for (int b = a; b < q; ++b) {
        H(a, b) = weighted[static_cast<std::size_t>(a)]
                    .cwiseProduct(design[static_cast<std::size_t>(b)])
                    .sum() *
                  inv_n;
        H(b, a) = H(a, b);
      }
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    Eigen::VectorXd dir = -ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !dir.allFinite() || ldlt.rcond() < 1e-14) {
      const double jitter = 1e-10 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
      H.diagonal().array() += jitter;
      ldlt.compute(H);
      dir = -ldlt.solve(grad);
    }
    if (!dir.allFinite()) {
      break;
    }

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd theta_new;
    Eigen::MatrixXd eta_new;
    double loss_new = loss;
    for (int halving = 0; halving < 60; ++halving) {
      theta_new = theta + step * dir;
      eta_new = predictor(theta_new);
      loss_new = family.loss(eta_new, y) * inv_n;
      if (std::isfinite(loss_new) && loss_new <= loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      break;
    }
    const double decrease = loss - loss_new;
    theta = theta_new;
    eta = eta_new;
    loss = loss_new;
    if (decrease <= 1e-15 * std::max(1.0, std::abs(loss))) {
      break;
    }
  }

  Eigen::MatrixXd refit = Eigen::MatrixXd::Zero(p, K);
  for (int c = 0; c < C; ++c) {
    for (const int f : clusters.indices(c)) {
      const double sign = beta_flat(f) > 0.0 ? 1.0 : -1.0;
      refit(f % p, f / p) = sign * theta(c);
    }
  }
  Eigen::VectorXd refit0 = fixed_beta0;
  if (intercept) {
    refit0 = theta.tail(K);
  }

  out.beta = gamma * fit.beta + (1.0 - gamma) * refit;
  out.beta0 = gamma * fit.beta0 + (1.0 - gamma) * refit0;
  out.clusters = Clusters::from_beta(
    std::span<const double>(out.beta.data(), static_cast<std::size_t>(out.beta.size())));
  const Eigen::MatrixXd eta_out = linear_predictor(x, out.beta, out.beta0);
  out.deviance = deviance(family, eta_out, y);
  out.primal = primal_objective(family, eta_out, y, flatten(out.beta), lambda, fit.alpha);
  return out;
}

PathResult
fit_path(const MatrixView& x,
         const Family& family,
         const Eigen::MatrixXd& y,
         const LambdaSequence& lambda,
         const PathConfig& config,
         const SolverConfig& solver_config)
{
  const Index n = x.rows();
  const Index p = x.cols();
  const Index K = family.responses();
  const Index pk = p * K;
  if (lambda.size() != pk) {
    throw std::invalid_argument("lambda length must equal p times the class count");
  }
  if (!(config.gamma >= 0.0 && config.gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in [0, 1]");
  }

  PathResult res;
  res.lambda = lambda;
  res.intercept = solver_config.intercept;
  res.gamma = config.gamma;
  res.alpha_max = alpha_max(x, family, y, lambda, solver_config.intercept);

  if (!config.alphas.empty()) {
    for (std::size_t i = 0; i < config.alphas.size(); ++i) {
      const double a = config.alphas[i];
      if (!(a > 0.0) || !std::isfinite(a) || (i > 0 && !(a < config.alphas[i - 1]))) {
        throw std::invalid_argument("alpha grid must be positive and strictly decreasing");
      }
    }
    res.grid = config.alphas;
  } else if (res.alpha_max == 0.0) {
    res.grid = { 0.0 };
  } else {
    const double ratio = config.alpha_min_ratio.value_or(n < p ? 1e-2 : 1e-4);
    res.grid = alpha_grid(res.alpha_max, config.path_length, ratio);
  }
  const int max_clusters = config.max_clusters.value_or(static_cast<int>(n) + 1);

  WarmStart warm;
  bool have_warm = false;
  Eigen::VectorXd grad_prev;
  double alpha_prev = res.grid.front();
  if (config.screening) {
    const Eigen::VectorXd beta0 = solver_config.intercept ? family.null_intercept(y)
                                                          : Eigen::VectorXd::Zero(K).eval();
    grad_prev = flat_gradient(x, family, y, Eigen::MatrixXd::Zero(p, K), beta0);
    res.gradient_evals += pk;
    alpha_prev = std::max(alpha_prev, res.alpha_max);
  }

  long long screened_total = 0;
  int steps = 0;
  double ratio_prev = 0.0;
  for (const double alpha : res.grid) {
    FitResult fit;
    if (config.screening) {
      const Eigen::VectorXd beta_prev =
        have_warm ? flatten(warm.beta) : Eigen::VectorXd::Zero(pk).eval();
      auto working = strong_set(grad_prev, beta_prev, lambda, alpha, alpha_prev);
      Eigen::VectorXd grad;
      while (true) {
        fit = solve(x, family, y, lambda, alpha, solver_config, have_warm ? &warm : nullptr,
                    &working);
        res.gradient_evals += fit.gradient_evals;
        grad = flat_gradient(x, family, y, fit.beta, fit.beta0);
        res.gradient_evals += pk;
        const auto violators = kkt_violations(grad, flatten(fit.beta), lambda, alpha);
        std::vector<Index> added;
        std::set_difference(violators.begin(), violators.end(), working.begin(), working.end(),
                            std::back_inserter(added));
        if (added.empty()) {
          break;
        }
        res.kkt_violations += static_cast<long long>(added.size());
        working = merge_sorted(working, added);
      }
      screened_total += static_cast<long long>(working.size());
      grad_prev = std::move(grad);
    } else {
      fit = solve(x, family, y, lambda, alpha, solver_config, have_warm ? &warm : nullptr);
      res.gradient_evals += fit.gradient_evals;
      screened_total += pk;
    }
    alpha_prev = alpha;
    ++steps;

    if (config.early_stopping && fit.n_nonzero_clusters() > max_clusters) {
      res.termination = Termination::cluster_limit;
      break;
    }

    const double ratio = fit.deviance_ratio();
    warm.beta = fit.beta;
    warm.beta0 = fit.beta0;
    warm.step = fit.step;
    have_warm = true;

    res.alphas.push_back(alpha);
    res.deviance_ratios.push_back(ratio);
    if (config.gamma < 1.0) {
      res.fits.push_back(relax_fit(x, family, y, fit, lambda, config.gamma, solver_config));
    } else {
      res.fits.push_back(std::move(fit));
    }

    if (config.early_stopping &&
        static_cast<int>(res.fits.size()) >= config.min_fits_before_stop) {
      if (ratio > config.dev_ratio_max) {
        res.termination = Termination::dev_saturated;
        break;
      }
      if (ratio - ratio_prev < config.dev_change_tol * ratio) {
        res.termination = Termination::dev_plateau;
        break;
      }
    }
    ratio_prev = ratio;
  }
  res.mean_screened_fraction =
    steps > 0 ? static_cast<double>(screened_total) / (static_cast<double>(steps) * static_cast<double>(pk))
              : 1.0;
  return res;
}

} // namespace slope
