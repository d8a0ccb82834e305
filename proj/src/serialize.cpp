#include "slope/serialize.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace slope {

using nlohmann::json;

namespace {

json
vector_json(const Eigen::VectorXd& v)
{
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) {
    out.push_back(v(i));
  }
  return out;
}

json
vector_json(const std::vector<double>& v)
{
  return json(v);
}

std::ostringstream
csv_stream()
{
  std::ostringstream out;
  out.precision(17);
  return out;
}

json
fit_json(const FitResult& fit, double deviance_ratio)
{
  json beta = json::array();
  const Index p = fit.beta.rows();
  for (Index k = 0; k < fit.beta.cols(); ++k) {
    for (Index j = 0; j < p; ++j) {
      if (fit.beta(j, k) != 0.0) {
        beta.push_back(json::array({ j, k, fit.beta(j, k) }));
      }
    }
  }
  return json{ { "alpha", fit.alpha },
               { "beta0", vector_json(fit.beta0) },
               { "beta", std::move(beta) },
               { "primal", fit.primal },
               { "dual", fit.dual },
               { "gap", fit.gap },
               { "relative_gap", fit.relative_gap },
               { "deviance", fit.deviance },
               { "null_deviance", fit.null_deviance },
               { "deviance_ratio", deviance_ratio },
               { "n_clusters", fit.n_nonzero_clusters() },
               { "n_nonzero", fit.n_nonzero() },
               { "iterations", fit.iterations },
               { "passes", fit.passes },
               { "status", to_string(fit.status) },
               { "relax_fallback", fit.relax_fallback } };
}

json
normalization_json(const Normalization& norm)
{
  return json{ { "centering", to_string(norm.centering) },
               { "scaling", to_string(norm.scaling) },
               { "centers", vector_json(norm.centers) },
               { "scales", vector_json(norm.scales) } };
}

json
context_json(const OutputContext& context)
{
  return json{ { "schema", 1 },
               { "command", context.command },
               { "loss", to_string(context.loss) },
               { "classes", context.classes },
               { "n", context.n },
               { "p", context.p },
               { "normalization", normalization_json(context.normalization) } };
}

std::string
dump(const json& doc)
{
  return doc.dump(2) + "\n";
}

} // namespace

std::string
to_string(Centering centering)
{
  switch (centering) {
    case Centering::none:
      return "none";
    case Centering::mean:
      return "mean";
    case Centering::manual:
      return "manual";
  }
  return "none";
}

std::string
to_string(Scaling scaling)
{
  switch (scaling) {
    case Scaling::none:
      return "none";
    case Scaling::sd:
      return "sd";
    case Scaling::l1:
      return "l1";
    case Scaling::l2:
      return "l2";
    case Scaling::max_abs:
      return "max_abs";
    case Scaling::manual:
      return "manual";
  }
  return "none";
}

Centering
parse_centering(const std::string& name)
{
  if (name == "none") {
    return Centering::none;
  }
  if (name == "mean") {
    return Centering::mean;
  }
  if (name == "manual") {
    return Centering::manual;
  }
  throw std::invalid_argument("unknown centering '" + name + "'");
}

Scaling
parse_scaling(const std::string& name)
{
  if (name == "none") {
    return Scaling::none;
  }
  if (name == "sd") {
    return Scaling::sd;
  }
  if (name == "l1") {
    return Scaling::l1;
  }
  if (name == "l2") {
    return Scaling::l2;
  }
  if (name == "max_abs") {
    return Scaling::max_abs;
  }
  if (name == "manual") {
    return Scaling::manual;
  }
  throw std::invalid_argument("unknown scaling '" + name + "'");
}

std::string
path_json(const PathResult& path, const OutputContext& context)
{
  json doc = context_json(context);
  doc["intercept"] = path.intercept;
  doc["lambda"] = json{ { "type", to_string(path.lambda.kind()) },
                        { "q", path.lambda.q },
                        { "theta1", path.lambda.theta1 },
                        { "theta2", path.lambda.theta2 },
                        { "values", vector_json(path.lambda.values()) } };
  doc["alpha_max"] = path.alpha_max;
  doc["gamma"] = path.gamma;
  doc["termination"] = to_string(path.termination);
  doc["gradient_evals"] = path.gradient_evals;
  json steps = json::array();
  for (std::size_t s = 0; s < path.fits.size(); ++s) {
    const double ratio = s < path.deviance_ratios.size() ? path.deviance_ratios[s]
                                                          : path.fits[s].deviance_ratio();
    steps.push_back(fit_json(path.fits[s], ratio));
  }
  doc["steps"] = std::move(steps);
  return dump(doc);
}

std::string
path_plot_csv(const PathResult& path)
{
  auto out = csv_stream();
  out << "step,alpha,index,class,value\n";
  for (std::size_t s = 0; s < path.fits.size(); ++s) {
    const auto& fit = path.fits[s];
    for (Index k = 0; k < fit.beta.cols(); ++k) {
      for (Index j = 0; j < fit.beta.rows(); ++j) {
        if (fit.beta(j, k) != 0.0) {
          out << s << ',' << fit.alpha << ',' << j << ',' << k << ',' << fit.beta(j, k) << '\n';
        }
      }
    }
  }
  return out.str();
}

std::string
trace_csv(const PathResult& path)
{
  auto out = csv_stream();
  out << "step,iteration,primal,dual,gap,relative_gap,step_size,n_clusters\n";
  for (std::size_t s = 0; s < path.fits.size(); ++s) {
    for (const auto& row : path.fits[s].trace) {
      out << s << ',' << row.iteration << ',' << row.primal << ',' << row.dual << ',' << row.gap
          << ',' << row.relative_gap << ',' << row.step << ',' << row.n_clusters << '\n';
    }
  }
  return out.str();
}

std::string
cv_json(const CvResult& cv, const OutputContext& context)
{
  json doc = context_json(context);
  doc["measure"] = to_string(cv.measure);
  doc["folds"] = cv.n_folds;
  doc["repeats"] = cv.n_repeats;
  doc["seed"] = cv.seed;
  doc["q"] = vector_json(cv.q_grid);
  doc["gamma"] = vector_json(cv.gamma_grid);
  json grids = json::array();
  for (const auto& g : cv.alpha_grids) {
    grids.push_back(vector_json(g));
  }
  doc["alpha_grids"] = std::move(grids);
  auto cell_json = [&](const CvCell& c) {
    return json{ { "q", c.q },       { "gamma", c.gamma },
                 { "alpha", c.alpha }, { "measure", to_string(cv.measure) },
                 { "mean", c.mean }, { "se", c.se },
                 { "lo", c.lo },     { "hi", c.hi },
                 { "values", vector_json(c.values) } };
  };
  json cells = json::array();
  for (const auto& c : cv.cells) {
    cells.push_back(cell_json(c));
  }
  doc["cells"] = std::move(cells);
  doc["optimum"] = cell_json(cv.cells.at(cv.optimum));
  doc["skipped"] = cv.skipped;
  return dump(doc);
}

std::string
cv_plot_csv(const CvResult& cv)
{
  auto out = csv_stream();
  out << "q,gamma,alpha,measure,mean,se,lo,hi\n";
  for (const auto& c : cv.cells) {
    out << c.q << ',' << c.gamma << ',' << c.alpha << ',' << to_string(cv.measure) << ',' << c.mean
        << ',' << c.se << ',' << c.lo << ',' << c.hi << '\n';
  }
  return out.str();
}

void
write_output(const std::string& path, const std::string& content)
{
  if (path == "-") {
    std::cout << content << std::flush;
    return;
  }
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    }
    out << content;
    out.flush();
    if (!out) {
      throw std::runtime_error("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename output to '" + path + "': " + ec.message());
  }
}

} // namespace slope
