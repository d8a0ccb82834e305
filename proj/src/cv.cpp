#include "slope/cv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace slope {

namespace {

// Class label 0..m-1 of every row of a binomial or multinomial response.
std::vector<int>
class_labels(const Family& family, const Eigen::MatrixXd& y)
{
  std::vector<int> labels(static_cast<std::size_t>(y.rows()));
  for (Index i = 0; i < y.rows(); ++i) {
    if (family.kind() == Loss::binomial) {
      labels[static_cast<std::size_t>(i)] = y(i, 0) > 0.5 ? 1 : 0;
      continue;
    }
    int label = static_cast<int>(y.cols());
    for (Index k = 0; k < y.cols(); ++k) {
      if (y(i, k) > 0.5) {
        label = static_cast<int>(k);
      }
    }
    labels[static_cast<std::size_t>(i)] = label;
  }
  return labels;
}

// Probabilities of all m classes, the reference class last.
Eigen::MatrixXd
full_probabilities(const Eigen::MatrixXd& mu)
{
  Eigen::MatrixXd out(mu.rows(), mu.cols() + 1);
  out.leftCols(mu.cols()) = mu;
  out.col(mu.cols()) = (1.0 - mu.rowwise().sum().array()).max(0.0);
  return out;
}

Eigen::MatrixXd
full_response(const Eigen::MatrixXd& y)
{
  Eigen::MatrixXd out(y.rows(), y.cols() + 1);
  out.leftCols(y.cols()) = y;
  out.col(y.cols()) = 1.0 - y.rowwise().sum().array();
  return out;
}

Eigen::MatrixXd
select_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows)
{
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Index>(i)) = m.row(rows[i]);
  }
  return out;
}

bool
is_classification(Loss loss)
{
  return loss == Loss::binomial || loss == Loss::multinomial;
}

} // namespace

Measure
parse_measure(const std::string& name)
{
  if (name == "mse") {
    return Measure::mse;
  }
  if (name == "mae") {
    return Measure::mae;
  }
  if (name == "deviance") {
    return Measure::deviance;
  }
  if (name == "misclass") {
    return Measure::misclass;
  }
  if (name == "auc") {
    return Measure::auc;
  }
  throw std::invalid_argument("unknown measure '" + name + "'");
}

std::string
to_string(Measure measure)
{
  switch (measure) {
    case Measure::mse:
      return "mse";
    case Measure::mae:
      return "mae";
    case Measure::deviance:
      return "deviance";
    case Measure::misclass:
      return "misclass";
    case Measure::auc:
      return "auc";
  }
  return "mse";
}

Measure
default_measure(Loss loss)
{
  return loss == Loss::gaussian ? Measure::mse : Measure::deviance;
}

double
auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels)
{
  const Index n = scores.size();
  if (labels.size() != n) {
    throw std::invalid_argument("auc: length mismatch");
  }
  std::vector<Index> ord(static_cast<std::size_t>(n));
  std::iota(ord.begin(), ord.end(), Index{ 0 });
  std::stable_sort(ord.begin(), ord.end(), [&](Index a, Index b) { return scores(a) < scores(b); });

  double rank_sum = 0.0;
  double positives = 0.0;
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && scores(ord[static_cast<std::size_t>(j + 1)]) == scores(ord[static_cast<std::size_t>(i)])) {
      ++j;
    }
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Index k = i; k <= j; ++k) {
      if (labels(ord[static_cast<std::size_t>(k)]) == 1.0) {
        rank_sum += rank;
        positives += 1.0;
      }
    }
    i = j + 1;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw std::invalid_argument("auc is undefined when only one class is present");
  }
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

double
evaluate_measure(Measure measure,
                 const Family& family,
                 const Eigen::MatrixXd& eta,
                 const Eigen::MatrixXd& y)
{
  if (eta.rows() != y.rows() || eta.cols() != y.cols() || y.rows() == 0) {
    throw std::invalid_argument("predictions and responses do not match");
  }
  const double n = static_cast<double>(y.rows());
  const bool multinomial = family.kind() == Loss::multinomial;
  const Eigen::MatrixXd mu = family.mean(eta);

  switch (measure) {
    case Measure::mse:
    case Measure::mae: {
      const Eigen::MatrixXd diff =
        multinomial ? (full_response(y) - full_probabilities(mu)).eval() : (y - mu).eval();
      const double total =
        measure == Measure::mse ? diff.squaredNorm() : diff.cwiseAbs().sum();
      return total / n;
    }
    case Measure::deviance:
      return deviance(family, eta, y) / n;
    case Measure::misclass: {
      if (!is_classification(family.kind())) {
        throw std::invalid_argument("misclass requires a binomial or multinomial loss");
      }
      const auto labels = class_labels(family, y);
      double wrong = 0.0;
      if (multinomial) {
        const Eigen::MatrixXd probs = full_probabilities(mu);
        for (Index i = 0; i < probs.rows(); ++i) {
          Index best = 0;
          probs.row(i).maxCoeff(&best);
          wrong += best != labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        }
      } else {
        for (Index i = 0; i < mu.rows(); ++i) {
          const int predicted = mu(i, 0) > 0.5 ? 1 : 0;
          wrong += predicted != labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        }
      }
      return wrong / n;
    }
    case Measure::auc: {
      if (!is_classification(family.kind())) {
        throw std::invalid_argument("auc requires a binomial or multinomial loss");
      }
      if (!multinomial) {
        return auc(mu.col(0), y.col(0));
      }
      // macro average of one-vs-rest AUCs over classes with both outcomes
      const Eigen::MatrixXd probs = full_probabilities(mu);
      const Eigen::MatrixXd truth = full_response(y);
      double total = 0.0;
      int used = 0;
      for (Index c = 0; c < probs.cols(); ++c) {
        const double pos = truth.col(c).sum();
        if (pos > 0.0 && pos < n) {
          total += auc(probs.col(c), truth.col(c));
          ++used;
        }
      }
      if (used == 0) {
        throw std::invalid_argument("auc is undefined when only one class is present");
      }
      return total / used;
    }
  }
  return 0.0;
}

std::vector<std::vector<int>>
make_folds(const Family& family,
           const Eigen::MatrixXd& y,
           int n_folds,
           int n_repeats,
           std::uint64_t seed)
{
  const Index n = y.rows();
  if (n_folds < 2 || n_folds > n) {
    throw std::invalid_argument("number of folds must lie in [2, n]");
  }
  if (n_repeats < 1) {
    throw std::invalid_argument("number of repeats must be at least 1");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> out;

  std::vector<std::vector<int>> groups;
  if (is_classification(family.kind())) {
    const auto labels = class_labels(family, y);
    groups.resize(static_cast<std::size_t>(std::max(family.classes(), 2)));
    for (Index i = 0; i < n; ++i) {
      groups[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(static_cast<int>(i));
    }
  } else {
    groups.emplace_back(static_cast<std::size_t>(n));
    std::iota(groups[0].begin(), groups[0].end(), 0);
  }

  for (int r = 0; r < n_repeats; ++r) {
    std::vector<int> fold(static_cast<std::size_t>(n), 0);
    int counter = 0;
    for (auto group : groups) {
      std::shuffle(group.begin(), group.end(), rng);
      for (const int i : group) {
        fold[static_cast<std::size_t>(i)] = counter++ % n_folds;
      }
    }
    out.push_back(std::move(fold));
  }
  return out;
}

CvResult
cross_validate(const MatrixView& x,
               const Family& family,
               const Eigen::MatrixXd& y,
               const CvConfig& cfg,
               const PathConfig& path_config,
               const SolverConfig& solver_config)
{
  if (x.has_row_subset()) {
    throw std::invalid_argument("cross-validation needs a view over all rows");
  }
  const Measure measure = cfg.measure.value_or(default_measure(family.kind()));
  if ((measure == Measure::auc || measure == Measure::misclass) &&
      !is_classification(family.kind())) {
    throw std::invalid_argument(to_string(measure) + " requires a binomial or multinomial loss");
  }
  if (cfg.q_grid.empty() || cfg.gamma_grid.empty()) {
    throw std::invalid_argument("q and gamma grids must not be empty");
  }
  for (const double g : cfg.gamma_grid) {
    if (!(g >= 0.0 && g <= 1.0)) {
      throw std::invalid_argument("gamma must lie in [0, 1]");
    }
  }

  const Index pk = x.cols() * family.responses();
  const auto folds = make_folds(family, y, cfg.n_folds, cfg.n_repeats, cfg.seed);
  const Normalization& base = x.normalization();

  CvResult res;
  res.measure = measure;
  res.n_folds = cfg.n_folds;
  res.n_repeats = cfg.n_repeats;
  res.seed = cfg.seed;
  res.q_grid = cfg.q_grid;
  res.gamma_grid = cfg.gamma_grid;

  PathConfig full_config = path_config;
  full_config.gamma = 1.0;
  std::vector<LambdaSequence> lambdas;
  for (const double q : cfg.q_grid) {
    LambdaOptions opt = cfg.lambda_options;
    opt.q = q;
    if (opt.n == 0) {
      opt.n = x.rows();
    }
    lambdas.push_back(make_lambda(cfg.lambda_kind, pk, opt));
    const auto full = fit_path(x, family, y, lambdas.back(), full_config, solver_config);
    if (full.alpha_max == 0.0) {
      throw DataError("the response has no variation to model");
    }
    res.alpha_grids.push_back(full.alphas);
  }

  const std::size_t n_q = cfg.q_grid.size();
  const std::size_t n_g = cfg.gamma_grid.size();
  const std::size_t n_eval = static_cast<std::size_t>(cfg.n_repeats * cfg.n_folds);
  const std::size_t n_tasks = n_q * n_eval;
  // values[task][gamma][alpha], NaN when the measure was undefined
  std::vector<std::vector<std::vector<double>>> values(n_tasks);

  auto run_task = [&](std::size_t task) {
    const std::size_t qi = task / n_eval;
    const int rep = static_cast<int>((task % n_eval) / static_cast<std::size_t>(cfg.n_folds));
    const int fold = static_cast<int>(task % static_cast<std::size_t>(cfg.n_folds));
    const auto& assignment = folds[static_cast<std::size_t>(rep)];
    std::vector<int> train;
    std::vector<int> test;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      (assignment[i] == fold ? test : train).push_back(static_cast<int>(i));
    }

    const Normalization train_norm = fit_normalization(MatrixView(x.data(), train), base.centering,
                                                       base.scaling, base.centers, base.scales);
    const MatrixView train_view(x.data(), train, train_norm);
    const MatrixView test_view(x.data(), test, train_norm);
    const Eigen::MatrixXd y_train = select_rows(y, train);
    const Eigen::MatrixXd y_test = select_rows(y, test);

    PathConfig fold_config = path_config;
    fold_config.alphas = res.alpha_grids[qi];
    fold_config.gamma = 1.0;
    fold_config.early_stopping = false;
    const auto path = fit_path(train_view, family, y_train, lambdas[qi], fold_config, solver_config);

    auto& out = values[task];
    out.assign(n_g, std::vector<double>(path.fits.size(), std::nan("")));
    for (std::size_t gi = 0; gi < n_g; ++gi) {
      for (std::size_t ai = 0; ai < path.fits.size(); ++ai) {
        const double gamma = cfg.gamma_grid[gi];
        const FitResult fit =
          gamma < 1.0 ? relax_fit(train_view, family, y_train, path.fits[ai], lambdas[qi], gamma,
                                  solver_config)
                      : path.fits[ai];
        const Eigen::MatrixXd eta = linear_predictor(test_view, fit.beta, fit.beta0);
        try {
          out[gi][ai] = evaluate_measure(measure, family, eta, y_test);
        } catch (const std::invalid_argument&) {
          // stays NaN; AUC is undefined on a single-class fold
        }
      }
    }
  };

  std::vector<std::exception_ptr> errors(n_tasks);
  std::atomic<std::size_t> next{ 0 };
  auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= n_tasks) {
        return;
      }
      try {
        run_task(task);
      } catch (...) {
        errors[task] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads =
    std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.threads, 1)), n_tasks);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& th : pool) {
    th.join();
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }

  const double z = 1.96;
  for (std::size_t qi = 0; qi < n_q; ++qi) {
    const auto& grid = res.alpha_grids[qi];
    for (std::size_t gi = 0; gi < n_g; ++gi) {
      for (std::size_t ai = 0; ai < grid.size(); ++ai) {
        CvCell cell;
        cell.q = cfg.q_grid[qi];
        cell.gamma = cfg.gamma_grid[gi];
        cell.alpha = grid[ai];
        for (std::size_t e = 0; e < n_eval; ++e) {
          const double v = values[qi * n_eval + e][gi][ai];
          if (std::isnan(v)) {
            ++res.skipped;
          } else {
            cell.values.push_back(v);
          }
        }
        const double count = static_cast<double>(cell.values.size());
        if (count > 0) {
          cell.mean = std::accumulate(cell.values.begin(), cell.values.end(), 0.0) / count;
          double ss = 0.0;
          for (const double v : cell.values) {
            ss += (v - cell.mean) * (v - cell.mean);
          }
          cell.se = count > 1 ? std::sqrt(ss / (count - 1.0)) / std::sqrt(count) : 0.0;
        } else {
          cell.mean = std::nan("");
        }
        cell.lo = cell.mean - z * cell.se;
        cell.hi = cell.mean + z * cell.se;
        res.cells.push_back(std::move(cell));
      }
    }
  }

  bool found = false;
  for (std::size_t c = 0; c < res.cells.size(); ++c) {
    const double m = res.cells[c].mean;
    if (std::isnan(m)) {
      continue;
    }
    const double best = res.cells[res.optimum].mean;
    if (!found || (maximized(measure) ? m > best : m < best)) {
      res.optimum = c;
      found = true;
    }
  }
  if (!found) {
    throw DataError("the cross-validation measure was undefined on every fold");
  }
  return res;
}

} // namespace slope
