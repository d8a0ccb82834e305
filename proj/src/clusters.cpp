#include "slope/clusters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace slope {

Clusters
Clusters::from_beta(std::span<const double> beta, double tolerance)
{
  Clusters out;
  const int p = static_cast<int>(beta.size());
  out.c_idx_.resize(beta.size());
  std::iota(out.c_idx_.begin(), out.c_idx_.end(), 0);
  std::stable_sort(out.c_idx_.begin(), out.c_idx_.end(), [&](int a, int b) {
    return std::abs(beta[a]) > std::abs(beta[b]);
  });

  out.c_ptr_.assign(1, 0);
  for (int i = 0; i < p; ++i) {
    const double m = std::abs(beta[out.c_idx_[i]]);
    if (out.c_.empty() || out.c_.back() - m > tolerance ||
        (m == 0.0 && out.c_.back() != 0.0)) {
      if (!out.c_.empty()) {
        out.c_ptr_.push_back(i);
      }
      out.c_.push_back(m);
    }
  }
  if (p > 0) {
    out.c_ptr_.push_back(p);
  }
  return out;
}

int
Clusters::n_nonzero() const
{
  return zero_cluster() >= 0 ? size() - 1 : size();
}

int
Clusters::zero_cluster() const
{
  return (!c_.empty() && c_.back() == 0.0) ? size() - 1 : -1;
}

std::span<const int>
Clusters::indices(int k) const
{
  const auto start = static_cast<std::size_t>(c_ptr_[static_cast<std::size_t>(k)]);
  return { c_idx_.data() + start, static_cast<std::size_t>(cluster_size(k)) };
}

int
Clusters::find(double magnitude) const
{
  // c is strictly decreasing
  auto it = std::lower_bound(c_.begin(), c_.end(), magnitude, std::greater<>());
  if (it != c_.end() && *it == magnitude) {
    return static_cast<int>(it - c_.begin());
  }
  return -1;
}

void
Clusters::update(int k, double z, std::optional<int> merge_target)
{
  if (z < 0.0 || !std::isfinite(z)) {
    throw std::invalid_argument("cluster magnitude must be finite and non-negative");
  }
  if (k < 0 || k >= size()) {
    throw std::out_of_range("cluster index out of range");
  }
  const double old = c_[k];
  if (z == old) {
    return;
  }

  auto idx = c_idx_.begin();
  const int s = cluster_size(k);
  const int m = size();

  if (z > old) {
    int i = k - 1;
    while (i >= 0 && c_[i] < z) {
      --i;
    }
    if (i >= 0 && c_[i] == z) {
      if (merge_target && *merge_target != i) {
        throw std::logic_error("inconsistent merge target");
      }
      // append block k to the end of cluster i
      std::rotate(idx + c_ptr_[i + 1], idx + c_ptr_[k], idx + c_ptr_[k + 1]);
      moved_ += static_cast<std::size_t>(c_ptr_[k + 1] - c_ptr_[i + 1]);
      for (int l = i + 1; l <= k; ++l) {
        c_ptr_[l] += s;
      }
      c_ptr_.erase(c_ptr_.begin() + k + 1);
      c_.erase(c_.begin() + k);
      return;
    }
    const int np = i + 1;
    if (np < k) {
      std::rotate(idx + c_ptr_[np], idx + c_ptr_[k], idx + c_ptr_[k + 1]);
      moved_ += static_cast<std::size_t>(c_ptr_[k + 1] - c_ptr_[np]);
      for (int l = k; l > np; --l) {
        c_ptr_[l] = c_ptr_[l - 1] + s;
      }
      std::rotate(c_.begin() + np, c_.begin() + k, c_.begin() + k + 1);
    }
    c_[np] = z;
    return;
  }

  int i = k + 1;
  while (i < m && c_[i] > z) {
    ++i;
  }
  if (i < m && c_[i] == z) {
    if (merge_target && *merge_target != i) {
      throw std::logic_error("inconsistent merge target");
    }
    // prepend block k to cluster i
    std::rotate(idx + c_ptr_[k], idx + c_ptr_[k + 1], idx + c_ptr_[i]);
    moved_ += static_cast<std::size_t>(c_ptr_[i] - c_ptr_[k]);
    for (int l = k + 2; l <= i; ++l) {
      c_ptr_[l] -= s;
    }
    c_ptr_.erase(c_ptr_.begin() + k + 1);
    c_.erase(c_.begin() + k);
    return;
  }
  const int np = i - 1;
  if (np > k) {
    std::rotate(idx + c_ptr_[k], idx + c_ptr_[k + 1], idx + c_ptr_[np + 1]);
    moved_ += static_cast<std::size_t>(c_ptr_[np + 1] - c_ptr_[k]);
    for (int l = k + 1; l <= np; ++l) {
      c_ptr_[l] = c_ptr_[l + 1] - s;
    }
    std::rotate(c_.begin() + k, c_.begin() + k + 1, c_.begin() + np + 1);
  }
  c_[np] = z;
}

std::vector<double>
Clusters::magnitudes() const
{
  std::vector<double> out(c_idx_.size(), 0.0);
  for (int k = 0; k < size(); ++k) {
    for (int j : indices(k)) {
      out[static_cast<std::size_t>(j)] = c_[k];
    }
  }
  return out;
}

std::string
Clusters::validate() const
{
  if (c_ptr_.empty() || c_ptr_.front() != 0) {
    return "c_ptr must start at 0";
  }
  if (c_ptr_.size() != c_.size() + 1 && !(c_.empty() && c_ptr_.size() == 1)) {
    return "c_ptr length must be number of clusters + 1";
  }
  for (std::size_t k = 0; k + 1 < c_ptr_.size(); ++k) {
    if (c_ptr_[k] >= c_ptr_[k + 1]) {
      return "c_ptr must be strictly increasing";
    }
  }
  if (c_ptr_.back() != static_cast<int>(c_idx_.size())) {
    return "last c_ptr must equal the coefficient count";
  }
  for (std::size_t k = 0; k < c_.size(); ++k) {
    if (c_[k] < 0.0) {
      return "negative cluster magnitude";
    }
    if (k + 1 < c_.size() && !(c_[k] > c_[k + 1])) {
      return "cluster magnitudes must be strictly decreasing";
    }
  }
  std::vector<char> seen(c_idx_.size(), 0);
  for (int j : c_idx_) {
    if (j < 0 || j >= static_cast<int>(c_idx_.size()) || seen[static_cast<std::size_t>(j)]) {
      return "c_idx is not a permutation";
    }
    seen[static_cast<std::size_t>(j)] = 1;
  }
  return {};
}

std::string
Clusters::validate(std::span<const double> beta) const
{
  auto msg = validate();
  if (!msg.empty()) {
    return msg;
  }
  if (beta.size() != c_idx_.size()) {
    return "coefficient count mismatch";
  }
  for (int k = 0; k < size(); ++k) {
    for (int j : indices(k)) {
      if (std::abs(beta[static_cast<std::size_t>(j)]) != c_[k]) {
        return "member magnitude differs from cluster magnitude";
      }
    }
  }
  return {};
}

std::string
cluster_pattern_csv(const Clusters& clusters, std::span<const double> beta)
{
  std::ostringstream out;
  out.precision(17);
  out << "coefficient_index,cluster_id,magnitude,sign\n";
  for (int k = 0; k < clusters.size(); ++k) {
    for (int j : clusters.indices(k)) {
      const double b = beta[static_cast<std::size_t>(j)];
      const int sign = (b > 0.0) - (b < 0.0);
      out << j << ',' << k << ',' << clusters.coeff(k) << ',' << sign << '\n';
    }
  }
  return out.str();
}

} // namespace slope
