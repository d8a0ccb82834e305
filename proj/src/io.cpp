#include "slope/matrix.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace slope {

namespace {

std::string
trim(const std::string& s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string>
split(const std::string& line, char delimiter)
{
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delimiter)) {
    out.push_back(trim(field));
  }
  if (!line.empty() && line.back() == delimiter) {
    out.emplace_back();
  }
  return out;
}

double
parse_double(const std::string& s, std::size_t line_no)
{
  const std::string t = trim(s);
  if (t.empty()) {
    throw DataError("empty field on line " + std::to_string(line_no));
  }
  std::size_t consumed = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &consumed);
  } catch (const std::exception&) {
    consumed = 0;
  }
  if (consumed != t.size()) {
    throw DataError("invalid number '" + t + "' on line " +
                    std::to_string(line_no));
  }
  return v;
}

std::ifstream
open(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path);
  }
  return in;
}

} // namespace

Dataset
read_csv(const std::string& path, const CsvOptions& options)
{
  auto in = open(path);
  std::string line;
  std::size_t line_no = 0;

  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    auto fields = split(line, options.delimiter);
    if (options.header && names.empty()) {
      names = std::move(fields);
      continue;
    }
    std::vector<double> values;
    values.reserve(fields.size());
    for (const auto& f : fields) {
      values.push_back(parse_double(f, line_no));
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw DataError("ragged row on line " + std::to_string(line_no));
    }
    if (!names.empty() && values.size() != names.size()) {
      throw DataError("row width does not match header on line " +
                      std::to_string(line_no));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) {
    throw DataError("no data rows in " + path);
  }

  const std::size_t width = rows.front().size();
  if (names.empty()) {
    for (std::size_t j = 0; j < width; ++j) {
      names.push_back("V" + std::to_string(j));
    }
  }

  std::size_t response = width;
  if (!options.response.empty()) {
    const auto it = std::find(names.begin(), names.end(), options.response);
    if (it != names.end()) {
      response = static_cast<std::size_t>(it - names.begin());
    } else {
      std::size_t idx = 0;
      const auto* b = options.response.data();
      const auto* e = b + options.response.size();
      auto [ptr, ec] = std::from_chars(b, e, idx);
      if (ec != std::errc{} || ptr != e || idx >= width) {
        throw DataError("response column '" + options.response +
                        "' not found");
      }
      response = idx;
    }
  }

  const std::size_t p = response < width ? width - 1 : width;
  if (p == 0) {
    throw DataError("no predictor columns in " + path);
  }
  Eigen::MatrixXd x(static_cast<Index>(rows.size()), static_cast<Index>(p));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Index>(rows.size()));
  std::vector<std::string> predictor_names;
  for (std::size_t j = 0; j < width; ++j) {
    if (j != response) {
      predictor_names.push_back(names[j]);
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Index col = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (j == response) {
        y(static_cast<Index>(i)) = rows[i][j];
      } else {
        x(static_cast<Index>(i), col++) = rows[i][j];
      }
    }
  }
  return { DesignMatrix(std::move(x)), std::move(y), std::move(predictor_names) };
}

Dataset
read_libsvm(const std::string& path, Index n_features)
{
  auto in = open(path);
  std::string line;
  std::size_t line_no = 0;

  std::vector<Eigen::Triplet<double, int>> triplets;
  std::vector<double> labels;
  Index max_col = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    if (trim(line).empty()) {
      continue;
    }
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    labels.push_back(parse_double(token, line_no));
    const int row = static_cast<int>(labels.size() - 1);
    long previous = 0;
    while (ss >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) {
        throw DataError("malformed feature '" + token + "' on line " +
                        std::to_string(line_no));
      }
      long idx = 0;
      const auto* b = token.data();
      auto [ptr, ec] = std::from_chars(b, b + colon, idx);
      if (ec != std::errc{} || ptr != b + colon || idx < 1) {
        throw DataError("invalid feature index on line " +
                        std::to_string(line_no));
      }
      if (idx <= previous) {
        throw DataError("feature indices must increase on line " +
                        std::to_string(line_no));
      }
      previous = idx;
      const double v = parse_double(token.substr(colon + 1), line_no);
      triplets.emplace_back(row, static_cast<int>(idx - 1), v);
      max_col = std::max<Index>(max_col, idx);
    }
  }
  if (labels.empty()) {
    throw DataError("no data rows in " + path);
  }
  const Index p = std::max(max_col, n_features);
  if (p == 0) {
    throw DataError("no features in " + path);
  }

  SparseMatrix x(static_cast<Index>(labels.size()), p);
  x.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(labels.data(),
                                                  static_cast<Index>(labels.size()));
  std::vector<std::string> names;
  for (Index j = 0; j < p; ++j) {
    names.push_back(std::to_string(j + 1));
  }
  return { DesignMatrix(std::move(x)), std::move(y), std::move(names) };
}

std::vector<double>
read_values(const std::string& path)
{
  auto in = open(path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    out.push_back(parse_double(line, line_no));
  }
  return out;
}

} // namespace slope
