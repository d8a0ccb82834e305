#pragma once

#include "slope/solver.hpp"

#include <optional>
#include <vector>

namespace slope {

enum class Termination
{
  completed,
  dev_plateau,
  dev_saturated,
  cluster_limit
};

std::string
to_string(Termination reason);

struct PathConfig
{
  int path_length = 100;
  /// Defaults to 1e-2 when n < p and 1e-4 otherwise.
  std::optional<double> alpha_min_ratio;
  /// Explicit, strictly decreasing grid; overrides path_length and the ratio.
  std::vector<double> alphas;
  double gamma = 1.0;
  bool screening = true;
  bool early_stopping = true;
  double dev_change_tol = 1e-5;
  double dev_ratio_max = 0.999;
  /// Defaults to n + 1.
  std::optional<int> max_clusters;
  /// Deviance-based rules are only consulted once this many fits exist.
  int min_fits_before_stop = 5;
};

struct PathResult
{
  /// One fit per computed grid point, relaxed when gamma < 1.
  std::vector<FitResult> fits;
  std::vector<double> alphas;
  /// Deviance ratio of the unrelaxed fit at each step.
  std::vector<double> deviance_ratios;
  Termination termination = Termination::completed;
  double alpha_max = 0.0;
  /// Full grid the path was planned over (fits may stop early).
  std::vector<double> grid;
  LambdaSequence lambda;
  bool intercept = true;
  double gamma = 1.0;
  /// Coefficient gradient evaluations summed over all solves and checks.
  long long gradient_evals = 0;
  /// Coefficients added back by the full KKT check.
  long long kkt_violations = 0;
  /// Mean working-set size relative to the coefficient count.
  double mean_screened_fraction = 1.0;
};

/// Flattened gradient (1/n) X^T r at (beta0, beta), index j + k p.
Eigen::VectorXd
flat_gradient(const MatrixView& x,
              const Family& family,
              const Eigen::MatrixXd& y,
              const Eigen::MatrixXd& beta,
              const Eigen::VectorXd& beta0);

/// Smallest alpha for which beta = 0 is optimal.
double
alpha_max(const MatrixView& x,
          const Family& family,
          const Eigen::MatrixXd& y,
          const LambdaSequence& lambda,
          bool intercept = true);

/// Log-spaced grid from alpha_max down to alpha_max * ratio.
std::vector<double>
alpha_grid(double alpha_max, int length, double ratio);

/// Sequential strong rule: flattened indices predicted to be active at
/// alpha_new given the gradient at the alpha_prev solution, together with
/// the currently nonzero coefficients. Sorted ascending.
std::vector<Index>
strong_set(const Eigen::VectorXd& gradient,
           const Eigen::VectorXd& beta,
           const LambdaSequence& lambda,
           double alpha_new,
           double alpha_prev);

/// Zero coefficients whose gradient breaks the optimality condition at
/// alpha (sorted ascending).
std::vector<Index>
kkt_violations(const Eigen::VectorXd& gradient,
               const Eigen::VectorXd& beta,
               const LambdaSequence& lambda,
               double alpha,
               double tolerance = 1e-10);

/// Unpenalized refit on the collapsed cluster design, blended as
/// gamma * fit + (1 - gamma) * refit. The certificate fields keep
/// describing the unrelaxed solution; primal and deviance are recomputed.
FitResult
relax_fit(const MatrixView& x,
          const Family& family,
          const Eigen::MatrixXd& y,
          const FitResult& fit,
          const LambdaSequence& lambda,
          double gamma,
          const SolverConfig& config);

PathResult
fit_path(const MatrixView& x,
         const Family& family,
         const Eigen::MatrixXd& y,
         const LambdaSequence& lambda,
         const PathConfig& path_config,
         const SolverConfig& solver_config);

} // namespace slope
