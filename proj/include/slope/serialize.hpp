#pragma once

#include "slope/cv.hpp"
#include "slope/path.hpp"

#include <string>

namespace slope {

/// Problem description written alongside results so that a reader can
/// re-evaluate the objective from the data file.
struct OutputContext
{
  std::string command = "path";
  Loss loss = Loss::gaussian;
  int classes = 1;
  Index n = 0;
  Index p = 0;
  Normalization normalization;
};

std::string
to_string(Centering centering);

std::string
to_string(Scaling scaling);

Centering
parse_centering(const std::string& name);

Scaling
parse_scaling(const std::string& name);

/// Versioned JSON document with one entry per step; coefficients are stored
/// as sparse [index, class, value] triplets.
std::string
path_json(const PathResult& path, const OutputContext& context);

/// step,alpha,index,class,value for every nonzero coefficient of every step.
std::string
path_plot_csv(const PathResult& path);

/// step,iteration,primal,dual,gap,relative_gap,step_size,n_clusters
std::string
trace_csv(const PathResult& path);

std::string
cv_json(const CvResult& cv, const OutputContext& context);

/// q,gamma,alpha,measure,mean,se,lo,hi for every grid cell.
std::string
cv_plot_csv(const CvResult& cv);

/// Writes through a temporary file in the same directory followed by a
/// rename; "-" writes to stdout.
void
write_output(const std::string& path, const std::string& content);

} // namespace slope
