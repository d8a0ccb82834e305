#include "cli.hpp"

#include "slope/cv.hpp"
#include "slope/path.hpp"
#include "slope/serialize.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace slope::cli {

namespace {

class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct Options
{
  std::string data;
  std::string response;
  std::string response_file;
  std::string format;
  bool header = true;
  std::string loss = "gaussian";
  std::string lambda = "bh";
  std::string q = "0.1";
  double theta1 = 1.0;
  double theta2 = 1.0;
  std::string lambda_file;
  double alpha = 0.0;
  double tol = 1e-4;
  int max_iter = 10000;
  int cd_maxit = 10;
  std::string cd_order = "random";
  std::uint64_t seed = 0;
  bool no_intercept = false;
  std::string center;
  std::string scale;
  std::string centers_file;
  std::string scales_file;
  int path_length = 100;
  double alpha_min_ratio = 0.0;
  std::string alphas_file;
  std::string gamma = "1";
  bool no_screening = false;
  int folds = 10;
  int repeats = 1;
  std::string measure;
  int threads = 0;
  std::string output = "-";
  std::string plot_data;
  std::string clusters_out;
  std::string trace;
  bool strict = false;
  bool verbose = false;
};

std::vector<double>
parse_list(const std::string& text, const std::string& what)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) {
        throw std::invalid_argument(item);
      }
    } catch (const std::exception&) {
      throw UsageError("invalid value '" + item + "' for " + what);
    }
  }
  if (out.empty()) {
    throw UsageError("empty list for " + what);
  }
  return out;
}

double
single_value(const std::string& text, const std::string& what)
{
  const auto values = parse_list(text, what);
  if (values.size() != 1) {
    throw UsageError(what + " takes a single value for this command");
  }
  return values.front();
}

Eigen::VectorXd
read_vector(const std::string& path)
{
  const auto values = read_values(path);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

int
default_threads()
{
  if (const char* env = std::getenv("SLOPE_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t > 0) {
        return t;
      }
    } catch (const std::exception&) {
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

struct Problem
{
  Dataset data;
  Loss loss = Loss::gaussian;
  int classes = 1;
  Eigen::MatrixXd y = {};
  Normalization normalization = {};
};

Dataset
load_dataset(const Options& o, const std::string& format)
{
  if (format == "libsvm") {
    return read_libsvm(o.data);
  }
  CsvOptions copt;
  copt.header = o.header;
  copt.response = o.response;
  return read_csv(o.data, copt);
}

Problem
load_problem(const Options& o)
{
  std::string format = o.format;
  if (format.empty()) {
    const auto dot = o.data.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : o.data.substr(dot + 1);
    format = (ext == "svm" || ext == "libsvm" || ext == "svmlight") ? "libsvm" : "csv";
  }

  if (format != "csv" && format != "libsvm") {
    throw UsageError("unknown format '" + format + "'");
  }
  if (format == "csv" && o.response.empty() && o.response_file.empty()) {
    throw UsageError("csv input needs --response or --response-file");
  }
  Problem prob{ load_dataset(o, format) };
  if (!o.response_file.empty()) {
    prob.data.y = read_vector(o.response_file);
    if (prob.data.y.size() != prob.data.x.rows()) {
      throw DataError("response file length does not match the number of rows");
    }
  }

  prob.loss = parse_loss(o.loss);
  Eigen::VectorXd yv = prob.data.y;
  if (prob.loss == Loss::binomial) {
    const std::set<double> levels(yv.data(), yv.data() + yv.size());
    if (levels.size() > 2) {
      throw DataError("binomial response has more than two distinct values");
    }
    if (levels.size() == 2 && !(levels.count(0.0) && levels.count(1.0))) {
      const double low = *levels.begin();
      for (Index i = 0; i < yv.size(); ++i) {
        yv(i) = yv(i) == low ? 0.0 : 1.0;
      }
    }
  }
  prob.y = make_response(prob.loss, yv, prob.classes);
  Family(prob.loss, prob.classes).validate(prob.y);

  const bool sparse = prob.data.x.is_sparse();
  const Centering centering =
    o.center.empty() ? (sparse ? Centering::none : Centering::mean) : parse_centering(o.center);
  const Scaling scaling =
    o.scale.empty() ? (sparse ? Scaling::max_abs : Scaling::sd) : parse_scaling(o.scale);
  const Eigen::VectorXd centers = o.centers_file.empty() ? Eigen::VectorXd() : read_vector(o.centers_file);
  const Eigen::VectorXd scales = o.scales_file.empty() ? Eigen::VectorXd() : read_vector(o.scales_file);
  prob.normalization = fit_normalization(MatrixView(prob.data.x), centering, scaling, centers, scales);
  return prob;
}

LambdaSequence
build_lambda(const Options& o, Index pk, Index n, double q)
{
  if (!o.lambda_file.empty()) {
    LambdaSequence lam(read_vector(o.lambda_file));
    if (lam.size() != pk) {
      throw DataError("lambda file must hold " + std::to_string(pk) + " values");
    }
    return lam;
  }
  LambdaOptions opt;
  opt.q = q;
  opt.n = n;
  opt.theta1 = o.theta1;
  opt.theta2 = o.theta2;
  return make_lambda(parse_lambda_kind(o.lambda), pk, opt);
}

SolverConfig
solver_config(const Options& o)
{
  SolverConfig c;
  c.tol = o.tol;
  c.max_it = o.max_iter;
  c.cd_maxit = o.cd_maxit;
  c.cd_order = parse_cd_order(o.cd_order);
  c.seed = o.seed;
  c.intercept = !o.no_intercept;
  c.record_trace = !o.trace.empty();
  return c;
}

PathConfig
path_config(const Options& o, const CLI::App& sub)
{
  PathConfig c;
  c.path_length = o.path_length;
  if (sub.count("--alpha-min-ratio") > 0) {
    c.alpha_min_ratio = o.alpha_min_ratio;
  }
  if (!o.alphas_file.empty()) {
    c.alphas = read_values(o.alphas_file);
  }
  c.screening = !o.no_screening;
  return c;
}

OutputContext
context(const std::string& command, const Problem& prob)
{
  OutputContext ctx;
  ctx.command = command;
  ctx.loss = prob.loss;
  ctx.classes = prob.classes;
  ctx.n = prob.data.x.rows();
  ctx.p = prob.data.x.cols();
  ctx.normalization = prob.normalization;
  return ctx;
}

int
finish_fits(const Options& o, const PathResult& path, const OutputContext& ctx)
{
  write_output(o.output, path_json(path, ctx));
  if (!o.plot_data.empty()) {
    write_output(o.plot_data, path_plot_csv(path));
  }
  if (!o.trace.empty()) {
    write_output(o.trace, trace_csv(path));
  }
  if (!o.clusters_out.empty() && !path.fits.empty()) {
    const auto& last = path.fits.back();
    write_output(o.clusters_out,
                 cluster_pattern_csv(last.clusters,
                                     std::span<const double>(last.beta.data(),
                                                             static_cast<std::size_t>(last.beta.size()))));
  }
  int unconverged = 0;
  for (const auto& fit : path.fits) {
    unconverged += fit.converged() ? 0 : 1;
  }
  if (o.verbose) {
    std::cerr << "steps: " << path.fits.size() << ", termination: " << to_string(path.termination)
              << ", not converged: " << unconverged << "\n";
  }
  if (unconverged > 0) {
    std::cerr << "warning: " << unconverged << " fit(s) did not reach the requested tolerance\n";
    if (o.strict) {
      return not_converged;
    }
  }
  return ok;
}

int
run_fit(const Options& o, const CLI::App& sub)
{
  const Problem prob = load_problem(o);
  const Family family(prob.loss, prob.classes);
  const MatrixView x(prob.data.x, prob.normalization);
  const Index pk = x.cols() * family.responses();
  const auto lambda = build_lambda(o, pk, x.rows(), single_value(o.q, "--q"));
  const double gamma = single_value(o.gamma, "--gamma");
  if (!(o.alpha >= 0.0)) {
    throw UsageError("--alpha must be non-negative");
  }
  const auto scfg = solver_config(o);
  (void)sub;

  PathResult path;
  path.lambda = lambda;
  path.intercept = scfg.intercept;
  path.gamma = gamma;
  path.alpha_max = alpha_max(x, family, prob.y, lambda, scfg.intercept);
  FitResult fit = solve(x, family, prob.y, lambda, o.alpha, scfg);
  path.gradient_evals = fit.gradient_evals;
  path.deviance_ratios.push_back(fit.deviance_ratio());
  path.alphas.push_back(o.alpha);
  path.grid = path.alphas;
  path.fits.push_back(gamma < 1.0 ? relax_fit(x, family, prob.y, fit, lambda, gamma, scfg) : fit);
  return finish_fits(o, path, context("fit", prob));
}

int
run_path(const Options& o, const CLI::App& sub)
{
  const Problem prob = load_problem(o);
  const Family family(prob.loss, prob.classes);
  const MatrixView x(prob.data.x, prob.normalization);
  const Index pk = x.cols() * family.responses();
  const auto lambda = build_lambda(o, pk, x.rows(), single_value(o.q, "--q"));
  PathConfig pcfg = path_config(o, sub);
  pcfg.gamma = single_value(o.gamma, "--gamma");
  const auto path = fit_path(x, family, prob.y, lambda, pcfg, solver_config(o));
  return finish_fits(o, path, context("path", prob));
}

int
run_cv(const Options& o, const CLI::App& sub)
{
  if (!o.lambda_file.empty()) {
    throw UsageError("cv does not accept --lambda-file");
  }
  const Problem prob = load_problem(o);
  const Family family(prob.loss, prob.classes);
  const MatrixView x(prob.data.x, prob.normalization);

  CvConfig cfg;
  cfg.n_folds = o.folds;
  cfg.n_repeats = o.repeats;
  cfg.q_grid = parse_list(o.q, "--q");
  cfg.gamma_grid = parse_list(o.gamma, "--gamma");
  if (!o.measure.empty()) {
    cfg.measure = parse_measure(o.measure);
  }
  cfg.seed = o.seed;
  cfg.threads = o.threads > 0 ? o.threads : default_threads();
  cfg.lambda_kind = parse_lambda_kind(o.lambda);
  cfg.lambda_options.theta1 = o.theta1;
  cfg.lambda_options.theta2 = o.theta2;

  const auto result = cross_validate(x, family, prob.y, cfg, path_config(o, sub), solver_config(o));
  write_output(o.output, cv_json(result, context("cv", prob)));
  if (!o.plot_data.empty()) {
    write_output(o.plot_data, cv_plot_csv(result));
  }
  if (o.verbose) {
    const auto& best = result.cells[result.optimum];
    std::cerr << "optimum: q=" << best.q << " gamma=" << best.gamma << " alpha=" << best.alpha
              << " " << to_string(result.measure) << "=" << best.mean << "\n";
  }
  return ok;
}

void
add_common(CLI::App* sub, Options& o, const std::string& command)
{
  sub->add_option("--data", o.data, "Predictor file (csv or libsvm)")->required();
  sub->add_option("--response", o.response, "Response column name or zero-based index (csv)");
  sub->add_option("--response-file", o.response_file, "Response values, one per line");
  sub->add_option("--format", o.format, "Input format: csv or libsvm (default from extension)");
  sub->add_flag("--header,!--no-header", o.header, "CSV has a header row (default on)");
  sub->add_option("--loss", o.loss, "gaussian, binomial, poisson or multinomial");
  sub->add_option("--lambda", o.lambda, "Penalty sequence: bh, gaussian, oscar or lasso");
  sub->add_option("--q", o.q, command == "cv" ? "FDR parameter(s), comma separated" : "FDR parameter");
  sub->add_option("--theta1", o.theta1, "OSCAR intercept");
  sub->add_option("--theta2", o.theta2, "OSCAR slope");
  if (command != "cv") {
    sub->add_option("--lambda-file", o.lambda_file, "Custom lambda values, one per line");
  }
  sub->add_option("--tol", o.tol, "Relative duality-gap tolerance");
  sub->add_option("--max-iter", o.max_iter, "Outer iteration limit");
  sub->add_option("--cd-maxit", o.cd_maxit, "Coordinate-descent sweeps per iteration");
  sub->add_option("--cd-order", o.cd_order, "random or cyclic");
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_flag("--no-intercept", o.no_intercept, "Fit without an intercept");
  sub->add_option("--center", o.center, "none, mean or manual");
  sub->add_option("--scale", o.scale, "none, sd, l1, l2, max_abs or manual");
  sub->add_option("--centers-file", o.centers_file, "Manual centers, one per line");
  sub->add_option("--scales-file", o.scales_file, "Manual scales, one per line");
  sub->add_option("--gamma", o.gamma,
                  command == "cv" ? "Relaxation weight(s) in [0, 1], comma separated"
                                  : "Relaxation weight in [0, 1]");
  sub->add_option("--output", o.output, "Output JSON path ('-' for stdout)");
  sub->add_option("--plot-data", o.plot_data, "Plot-data CSV path");
  sub->add_flag("--verbose", o.verbose, "Progress summary on stderr");
  if (command == "fit") {
    sub->add_option("--alpha", o.alpha, "Penalty multiplier")->required();
  } else {
    auto* length = sub->add_option("--path-length", o.path_length, "Number of alpha values");
    sub->add_option("--alpha-min-ratio", o.alpha_min_ratio, "Smallest alpha over alpha_max");
    sub->add_option("--alphas", o.alphas_file, "Explicit alpha grid, one per line")->excludes(length);
    sub->add_flag("--no-screening", o.no_screening, "Disable the strong screening rule");
  }
  if (command != "cv") {
    sub->add_option("--clusters-out", o.clusters_out, "Cluster pattern CSV of the last fit");
    sub->add_option("--trace", o.trace, "Per-iteration convergence trace CSV");
    sub->add_flag("--strict", o.strict, "Exit with status 3 when a fit does not converge");
  } else {
    sub->add_option("--folds", o.folds, "Number of folds");
    sub->add_option("--repeats", o.repeats, "Number of repetitions");
    sub->add_option("--measure", o.measure, "mse, mae, deviance, misclass or auc");
    sub->add_option("--threads", o.threads, "Worker threads (default SLOPE_THREADS or all cores)");
  }
}

} // namespace

int
run(int argc, const char* const* argv)
{
  CLI::App app{ "Sorted L1 penalized generalized linear models", "slope" };
  app.require_subcommand(1);
  Options o;
  auto* fit = app.add_subcommand("fit", "Fit a single model at a fixed alpha");
  auto* path = app.add_subcommand("path", "Fit the regularization path");
  auto* cv = app.add_subcommand("cv", "Cross-validate over q, gamma and alpha");
  add_common(fit, o, "fit");
  add_common(path, o, "path");
  add_common(cv, o, "cv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage_error;
  }

  try {
    if (fit->parsed()) {
      return run_fit(o, *fit);
    }
    if (path->parsed()) {
      return run_path(o, *path);
    }
    return run_cv(o, *cv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage_error;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return data_error;
  }
}

} // namespace slope::cli
