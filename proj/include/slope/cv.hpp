#pragma once

#include "slope/path.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace slope {

enum class Measure
{
  mse,
  mae,
  deviance,
  misclass,
  auc
};

Measure
parse_measure(const std::string& name);

std::string
to_string(Measure measure);

/// mse for gaussian, deviance otherwise.
Measure
default_measure(Loss loss);

/// true when larger values are better
inline bool
maximized(Measure measure)
{
  return measure == Measure::auc;
}

struct CvConfig
{
  int n_folds = 10;
  int n_repeats = 1;
  std::vector<double> q_grid{ 0.1 };
  std::vector<double> gamma_grid{ 1.0 };
  std::optional<Measure> measure;
  std::uint64_t seed = 0;
  /// Worker threads; values below 1 mean 1.
  int threads = 1;
  LambdaKind lambda_kind = LambdaKind::bh;
  /// theta1/theta2 and the sample count for the sequence; q comes from q_grid.
  LambdaOptions lambda_options;
};

struct CvCell
{
  double q = 0.0;
  double gamma = 1.0;
  double alpha = 0.0;
  double mean = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  /// One value per fold x repeat evaluation that produced a result.
  std::vector<double> values;
};

struct CvResult
{
  Measure measure = Measure::mse;
  int n_folds = 0;
  int n_repeats = 0;
  std::uint64_t seed = 0;
  std::vector<double> q_grid;
  std::vector<double> gamma_grid;
  /// Shared alpha grid for each q (the full-data path's alphas).
  std::vector<std::vector<double>> alpha_grids;
  /// Cells ordered by q, then gamma, then alpha.
  std::vector<CvCell> cells;
  std::size_t optimum = 0;
  /// Fold evaluations dropped because the measure was undefined there.
  int skipped = 0;
};

/// Measure value of linear predictors `eta` against responses `y`.
/// Throws std::invalid_argument when AUC is undefined (a single class).
double
evaluate_measure(Measure measure,
                 const Family& family,
                 const Eigen::MatrixXd& eta,
                 const Eigen::MatrixXd& y);

/// Mann-Whitney statistic of `scores` for positives `labels == 1`.
double
auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

/// Fold assignment (0..n_folds-1) for every sample, one vector per repeat.
/// Classification families are stratified by class.
std::vector<std::vector<int>>
make_folds(const Family& family,
           const Eigen::MatrixXd& y,
           int n_folds,
           int n_repeats,
           std::uint64_t seed);

/// `x` must not carry a row subset. Normalization is refit on every training
/// split with the modes of `x.normalization()`.
CvResult
cross_validate(const MatrixView& x,
               const Family& family,
               const Eigen::MatrixXd& y,
               const CvConfig& cv_config,
               const PathConfig& path_config,
               const SolverConfig& solver_config);

} // namespace slope
