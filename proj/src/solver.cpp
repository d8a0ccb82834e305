
#include "slope/solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>

namespace slope {

CdOrder
parse_cd_order(const std::string& name)
{
  if (name == "random") {
    return CdOrder::random;
  }
  if (name == "cyclic") {
    return CdOrder::cyclic;
  }
  throw std::invalid_argument("unknown coordinate-descent order '" + name + "'");
}

std::string
to_string(CdOrder order)
{
  return order == CdOrder::random ? "random" : "cyclic";
}

std::string
to_string(SolveStatus status)
{
  switch (status) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iterations:
      return "max_iterations";
    case SolveStatus::line_search_failure:
      return "line_search_failure";
  }
  return "max_iterations";
}

SparseMatrix
FitResult::sparse_beta() const
{
  return beta.sparseView(0.0, 0.0);
}

int
FitResult::n_nonzero() const
{
  return static_cast<int>((beta.array() != 0.0).count());
}

namespace {

// State of one solve restricted to the working set.
class Solver
{
public:
  Solver(const MatrixView& x,
         const Family& family,
         const Eigen::MatrixXd& y,
         const LambdaSequence& lambda,
         double alpha,
         const SolverConfig& config,
         const WarmStart* warm,
         const std::vector<Index>* working_set);

  FitResult run();

private:
  double penalty(const Eigen::VectorXd& b) const
  {
    return m_ > 0 ? alpha_ * sorted_l1_norm(b, *lambda_) : 0.0;
  }
  double mean_loss(const Eigen::MatrixXd& eta) const
  {
    return family_.loss(eta, y_) / static_cast<double>(n_);
  }
  void compute_gradient();
  /// (1/n) X_j^T w_k over the working set.
  Eigen::VectorXd weighted_gradient(const Eigen::MatrixXd& w) const;
  bool pgd_step();
  double primal_change(const Eigen::MatrixXd& eta_old,
                       const Eigen::MatrixXd& r_old,
                       const Eigen::VectorXd& b_old) const;
  void cd_phase();

  const MatrixView& x_;
  const Family& family_;
  const Eigen::MatrixXd& y_;
  const LambdaSequence& full_lambda_;
  std::optional<LambdaSequence> lambda_;
  double alpha_;
  const SolverConfig& config_;

  Index n_;
  Index p_;
  Index K_;
  Index m_;
  std::vector<Index> ws_;
  std::vector<Index> col_;
  std::vector<Index> cls_;
  Eigen::VectorXd column_means_;

  Eigen::VectorXd b_;
  Eigen::VectorXd b0_;
  Eigen::MatrixXd eta_;
  double loss_ = 0.0;
  double t_ = 1.0;

  Eigen::MatrixXd r_;
  Eigen::VectorXd grad_;
  Eigen::VectorXd grad0_;

  std::mt19937_64 rng_;
  FitResult result_;
};

Solver::Solver(const MatrixView& x,
               const Family& family,
               const Eigen::MatrixXd& y,
               const LambdaSequence& lambda,
               double alpha,
               const SolverConfig& config,
               const WarmStart* warm,
               const std::vector<Index>* working_set)
  : x_(x)
  , family_(family)
  , y_(y)
  , full_lambda_(lambda)
  , alpha_(alpha)
  , config_(config)
  , n_(x.rows())
  , p_(x.cols())
  , K_(family.responses())
  , rng_(config.seed)
{
  if (y.rows() != n_ || y.cols() != K_) {
    throw std::invalid_argument("response dimensions do not match the design");
  }
  if (lambda.size() != p_ * K_) {
    throw std::invalid_argument("lambda length must equal p times the class count");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("alpha must be finite and non-negative");
  }
  if (!(config.tol > 0.0)) {
    throw std::invalid_argument("tolerance must be positive");
  }
  if (config.cd_maxit < 0 || config.max_it < 0) {
    throw std::invalid_argument("iteration limits must be non-negative");
  }

  if (working_set != nullptr) {
    ws_ = *working_set;
    for (std::size_t i = 0; i < ws_.size(); ++i) {
      if (ws_[i] < 0 || ws_[i] >= p_ * K_ || (i > 0 && ws_[i] <= ws_[i - 1])) {
        throw std::invalid_argument("working set must be sorted, distinct and in range");
      }
    }
  } else {
    ws_.resize(static_cast<std::size_t>(p_ * K_));
    for (Index f = 0; f < p_ * K_; ++f) {
      ws_[static_cast<std::size_t>(f)] = f;
    }
  }
  m_ = static_cast<Index>(ws_.size());
  if (m_ == lambda.size()) {
    lambda_ = lambda;
  } else if (m_ > 0) {
    lambda_ = lambda.prefix(m_);
  }

  col_.resize(ws_.size());
  cls_.resize(ws_.size());
  column_means_.resize(m_);
  std::vector<double> cache(static_cast<std::size_t>(p_), std::nan(""));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n_);
  for (Index i = 0; i < m_; ++i) {
    const auto f = ws_[static_cast<std::size_t>(i)];
    const auto j = f % p_;
    col_[static_cast<std::size_t>(i)] = j;
    cls_[static_cast<std::size_t>(i)] = f / p_;
    auto& cm = cache[static_cast<std::size_t>(j)];
    if (std::isnan(cm)) {
      cm = config.intercept ? x.column_dot(j, ones, static_cast<double>(n_)) / static_cast<double>(n_)
                            : 0.0;
    }
    column_means_(i) = cm;
  }

  b_ = Eigen::VectorXd::Zero(m_);
  b0_ = Eigen::VectorXd::Zero(K_);
  if (warm != nullptr) {
    if (warm->beta.rows() != p_ || warm->beta.cols() != K_ || warm->beta0.size() != K_) {
      throw std::invalid_argument("warm start dimensions do not match");
    }
    for (Index i = 0; i < m_; ++i) {
      b_(i) = warm->beta(col_[static_cast<std::size_t>(i)], cls_[static_cast<std::size_t>(i)]);
    }
    if (config.intercept) {
      b0_ = warm->beta0;
    }
    if (warm->step > 0.0) {
      t_ = warm->step;
    }
  } else if (config.intercept) {
    b0_ = family.null_intercept(y);
  }

  eta_.resize(n_, K_);
  eta_.rowwise() = b0_.transpose();
  for (Index i = 0; i < m_; ++i) {
    if (b_(i) != 0.0) {
      x_.add_column(col_[static_cast<std::size_t>(i)], b_(i),
                    eta_.col(cls_[static_cast<std::size_t>(i)]));
    }
  }
  loss_ = mean_loss(eta_);
  grad_.resize(m_);
}

void
Solver::compute_gradient()
{
  r_ = family_.residual(eta_, y_);
  grad0_ = r_.colwise().mean().transpose();
  const Eigen::VectorXd r_sum = r_.colwise().sum().transpose();
  const double n = static_cast<double>(n_);
  for (Index i = 0; i < m_; ++i) {
    const auto k = cls_[static_cast<std::size_t>(i)];
    grad_(i) = x_.column_dot(col_[static_cast<std::size_t>(i)], r_.col(k), r_sum(k)) / n;
  }
  result_.passes += 1;
  result_.gradient_evals += m_;
}

Eigen::VectorXd
Solver::weighted_gradient(const Eigen::MatrixXd& w) const
{
  Eigen::VectorXd out(m_);
  const Eigen::VectorXd w_sum = w.colwise().sum().transpose();
  for (Index i = 0; i < m_; ++i) {
    const auto k = cls_[static_cast<std::size_t>(i)];
    out(i) = x_.column_dot(col_[static_cast<std::size_t>(i)], w.col(k), w_sum(k)) / static_cast<double>(n_);
  }
  return out;
}

bool
Solver::pgd_step()
{
  const double n = static_cast<double>(n_);
  while (true) {
    Eigen::VectorXd b_new = b_;
    if (m_ > 0) {
      b_new = prox(b_ - t_ * grad_, *lambda_, alpha_, t_);
    }
    Eigen::VectorXd b0_new = b0_;
    if (config_.intercept) {
      b0_new -= t_ * grad0_;
    }
    const Eigen::VectorXd d = b_new - b_;
    const Eigen::VectorXd d0 = b0_new - b0_;

    Eigen::MatrixXd step = Eigen::MatrixXd::Zero(n_, K_);
    for (Index i = 0; i < m_; ++i) {
      if (d(i) != 0.0) {
        x_.add_column(col_[static_cast<std::size_t>(i)], d(i),
                      step.col(cls_[static_cast<std::size_t>(i)]));
      }
    }
    for (Index k = 0; k < K_; ++k) {
      if (d0(k) != 0.0) {
        step.col(k).array() += d0(k);
      }
    }
    // F(b + d) <= F(b) + grad . d + |d|^2 / (2t), with the left side minus the
    // linear term evaluated directly so the test stays exact near convergence
    const double excess = family_.bregman(eta_, step) / n;
    if (excess <= (d.squaredNorm() + d0.squaredNorm()) / (2.0 * t_)) {
      b_ = std::move(b_new);
      b0_ = std::move(b0_new);
      eta_ += step;
      loss_ = mean_loss(eta_);
      t_ *= config_.growth;
      return true;
    }
    t_ *= config_.shrink;
    if (t_ < config_.min_step) {
      return false;
    }
  }
}

// P(current) - P(old) without cancelling two nearly equal objectives: the
// loss part as linear term plus excess, the penalty over sorted magnitudes.
double
Solver::primal_change(const Eigen::MatrixXd& eta_old,
                      const Eigen::MatrixXd& r_old,
                      const Eigen::VectorXd& b_old) const
{
  const Eigen::MatrixXd step = eta_ - eta_old;
  const double n = static_cast<double>(n_);
  double change = (r_old.cwiseProduct(step).sum() + family_.bregman(eta_old, step)) / n;
  if (m_ > 0) {
    Eigen::VectorXd a = b_.cwiseAbs();
    Eigen::VectorXd c = b_old.cwiseAbs();
    std::sort(a.data(), a.data() + a.size(), std::greater<>());
    std::sort(c.data(), c.data() + c.size(), std::greater<>());
    change += alpha_ * lambda_->values().dot(a - c);
  }
  return change;
}

void
Solver::cd_phase()
{
  const Eigen::MatrixXd w = family_.hessian_weight(eta_, y_);
  // r~ = eta - z for the working response z
  Eigen::MatrixXd rt = family_.residual(eta_, y_).array() / w.array();
  // With several classes the diagonal weights ignore the coupling between
  // classes, so the working residual goes stale after each update. There the
  // exact residual is refreshed instead and only the curvature is taken from w.
  const bool coupled = K_ > 1;
  Eigen::MatrixXd r_exact;
  if (coupled) {
    r_exact = family_.residual(eta_, y_);
  }
  Clusters clusters = Clusters::from_beta(std::span<const double>(b_.data(), b_.size()));

  const Eigen::VectorXd b_snap = b_;
  const Eigen::VectorXd b0_snap = b0_;
  const Eigen::MatrixXd eta_snap = eta_;
  const double loss_snap = loss_;
  const Eigen::MatrixXd r_snap = rt.cwiseProduct(w);

  const double n = static_cast<double>(n_);
  Eigen::MatrixXd xt = Eigen::MatrixXd::Zero(n_, K_);
  std::vector<char> touched(static_cast<std::size_t>(K_), 0);
  std::vector<Index> reps;

  for (int sweep = 0; sweep < config_.cd_maxit; ++sweep) {
    reps.clear();
    for (int k = 0; k < clusters.n_nonzero(); ++k) {
      reps.push_back(clusters.indices(k)[0]);
    }
    if (config_.cd_order == CdOrder::random) {
      std::shuffle(reps.begin(), reps.end(), rng_);
    }

    for (const auto rep : reps) {
      const double c = std::abs(b_(rep));
      if (c == 0.0) {
        continue;
      }
      const int k = clusters.find(c);
      if (k < 0) {
        continue;
      }
      const auto members = clusters.indices(k);
      std::fill(touched.begin(), touched.end(), 0);
      for (const int f : members) {
        const auto kc = cls_[static_cast<std::size_t>(f)];
        if (!touched[static_cast<std::size_t>(kc)]) {
          xt.col(kc).setZero();
          touched[static_cast<std::size_t>(kc)] = 1;
        }
        x_.add_column(col_[static_cast<std::size_t>(f)], b_(f) > 0.0 ? 1.0 : -1.0, xt.col(kc));
      }
      result_.gradient_evals += static_cast<long long>(members.size());

      double gamma = 0.0;
      double xi = 0.0;
      for (Index kc = 0; kc < K_; ++kc) {
        if (touched[static_cast<std::size_t>(kc)]) {
          const auto wx = w.col(kc).cwiseProduct(xt.col(kc));
          gamma += coupled ? xt.col(kc).dot(r_exact.col(kc)) : wx.dot(rt.col(kc));
          xi += wx.dot(xt.col(kc));
        }
      }
      gamma /= n;
      xi /= n;
      if (!(xi > 1e-12)) {
        continue;
      }

      const auto tr = slope_threshold(c * xi - gamma, xi, k, clusters, *lambda_, alpha_);
      if (tr.magnitude == c) {
        continue;
      }
      const double delta = tr.magnitude - c;
      for (Index kc = 0; kc < K_; ++kc) {
        if (touched[static_cast<std::size_t>(kc)]) {
          eta_.col(kc) += delta * xt.col(kc);
          rt.col(kc) += delta * xt.col(kc);
        }
      }
      for (const int f : members) {
        b_(f) = tr.magnitude == 0.0 ? 0.0 : std::copysign(tr.magnitude, b_(f));
      }
      clusters.update(k, tr.magnitude, tr.merge_target);
      if (coupled) {
        r_exact = family_.residual(eta_, y_);
      }
    }

    if (config_.intercept) {
      for (Index kc = 0; kc < K_; ++kc) {
        const double shift = (coupled ? r_exact.col(kc).sum() : w.col(kc).dot(rt.col(kc))) / w.col(kc).sum();
        b0_(kc) -= shift;
        eta_.col(kc).array() -= shift;
        rt.col(kc).array() -= shift;
      }
      if (coupled) {
        r_exact = family_.residual(eta_, y_);
      }
    }
    result_.cd_sweeps += 1;

    if (!(primal_change(eta_snap, r_snap, b_snap) < 0.0)) {
      b_ = b_snap;
      b0_ = b0_snap;
      eta_ = eta_snap;
      loss_ = loss_snap;
      break;
    }
    loss_ = mean_loss(eta_);
  }
}

FitResult
Solver::run()
{
  result_.alpha = alpha_;
  result_.lambda_kind = full_lambda_.kind();
  result_.q = full_lambda_.q;
  result_.theta1 = full_lambda_.theta1;
  result_.theta2 = full_lambda_.theta2;

  for (int it = 0;; ++it) {
    compute_gradient();
    const double primal = loss_ + penalty(b_);
    const auto dual_point = feasible_dual_point(family_, eta_, y_, r_, grad_, column_means_, cls_,
                                                m_ > 0 ? *lambda_ : full_lambda_,
                                                alpha_, config_.intercept,
                                                [this](const Eigen::MatrixXd& w) { return weighted_gradient(w); });
    const auto g = duality_gap(primal, dual_objective(family_, dual_point.delta, y_));
    result_.primal = g.primal;
    result_.dual = g.dual;
    result_.gap = g.gap;
    result_.relative_gap = g.relative;
    if (config_.record_trace) {
      TraceRow row;
      row.iteration = it;
      row.primal = g.primal;
      row.dual = g.dual;
      row.gap = g.gap;
      row.relative_gap = g.relative;
      row.step = t_;
      row.n_clusters = Clusters::from_beta(std::span<const double>(b_.data(), b_.size())).n_nonzero();
      result_.trace.push_back(row);
    }
    if (g.relative <= config_.tol) {
      result_.status = SolveStatus::converged;
      break;
    }
    if (it >= config_.max_it) {
      result_.status = SolveStatus::max_iterations;
      break;
    }
    result_.iterations = it + 1;
    if (!pgd_step()) {
      result_.status = SolveStatus::line_search_failure;
      break;
    }
    if (config_.cd_maxit > 0 && m_ > 0) {
      cd_phase();
    }
  }

  result_.beta = Eigen::MatrixXd::Zero(p_, K_);
  for (Index i = 0; i < m_; ++i) {
    result_.beta(col_[static_cast<std::size_t>(i)], cls_[static_cast<std::size_t>(i)]) = b_(i);
  }
  result_.beta0 = b0_;
  result_.step = t_;
  result_.clusters = Clusters::from_beta(
    std::span<const double>(result_.beta.data(), static_cast<std::size_t>(result_.beta.size())));
  result_.deviance = deviance(family_, eta_, y_);
  result_.null_deviance = null_deviance(family_, y_, config_.intercept);
  return std::move(result_);
}

} // namespace

FitResult
solve(const MatrixView& x,
      const Family& family,
      const Eigen::MatrixXd& y,
      const LambdaSequence& lambda,
      double alpha,
      const SolverConfig& config,
      const WarmStart* warm,
      const std::vector<Index>* working_set)
{
  Solver solver(x, family, y, lambda, alpha, config, warm, working_set);
  return solver.run();
}

} // namespace slope
