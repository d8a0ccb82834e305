#pragma once

#include "slope/clusters.hpp"
#include "slope/duality.hpp"
#include "slope/losses.hpp"
#include "slope/sorted_l1.hpp"

#include <cstdint>
#include <vector>

namespace slope {

enum class CdOrder
{
  random,
  cyclic
};

CdOrder
parse_cd_order(const std::string& name);

std::string
to_string(CdOrder order);

struct SolverConfig
{
  /// Relative duality gap at which a solve stops.
  double tol = 1e-4;
  int max_it = 10000;
  /// Coordinate-descent sweeps per outer iteration; 0 gives plain
  /// proximal gradient descent.
  int cd_maxit = 10;
  CdOrder cd_order = CdOrder::random;
  double shrink = 0.5;
  double growth = 1.1;
  double min_step = 1e-12;
  std::uint64_t seed = 0;
  bool intercept = true;
  bool record_trace = false;
};

enum class SolveStatus
{
  converged,
  max_iterations,
  line_search_failure
};

std::string
to_string(SolveStatus status);

struct TraceRow
{
  int iteration = 0;
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double relative_gap = 0.0;
  double step = 0.0;
  int n_clusters = 0;
};

struct FitResult
{
  Eigen::VectorXd beta0;  // K
  Eigen::MatrixXd beta;   // p x K
  double alpha = 0.0;
  LambdaKind lambda_kind = LambdaKind::custom;
  double q = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;

  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double relative_gap = 0.0;
  SolveStatus status = SolveStatus::max_iterations;
  bool converged() const { return status == SolveStatus::converged; }

  /// Outer iterations started.
  int iterations = 0;
  /// Full gradient evaluations over the working set.
  int passes = 0;
  int cd_sweeps = 0;
  /// Coefficient-level gradient evaluations (gradient entries plus
  /// coordinate-descent member visits).
  long long gradient_evals = 0;
  /// Final step size, usable to warm start the next solve.
  double step = 1.0;

  /// Clusters over the flattened coefficients (index j + k p).
  Clusters clusters;
  double deviance = 0.0;
  double null_deviance = 0.0;
  /// Set by the relaxation when it had to fall back to the unrelaxed fit.
  bool relax_fallback = false;
  std::vector<TraceRow> trace;

  SparseMatrix sparse_beta() const;
  int n_nonzero_clusters() const { return clusters.n_nonzero(); }
  int n_nonzero() const;
  double deviance_ratio() const
  {
    return null_deviance > 0.0 ? 1.0 - deviance / null_deviance : 0.0;
  }
};

struct WarmStart
{
  Eigen::VectorXd beta0;
  Eigen::MatrixXd beta;
  double step = 1.0;
};

/// Solves min (1/n) sum f(eta_i, y_i) + alpha J_lambda(vec(beta)) with the
/// hybrid proximal-gradient / coordinate-descent method.
///
/// `y` is the family response matrix (see make_response). When
/// `working_set` is given, only those flattened coefficients (sorted,
/// distinct) are free, the rest are fixed at zero, and the penalty uses the
/// first |working_set| values of `lambda`.
FitResult
solve(const MatrixView& x,
      const Family& family,
      const Eigen::MatrixXd& y,
      const LambdaSequence& lambda,
      double alpha,
      const SolverConfig& config,
      const WarmStart* warm = nullptr,
      const std::vector<Index>* working_set = nullptr);

} // namespace slope
