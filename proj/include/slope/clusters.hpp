#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace slope {

/// Partition of coefficients into groups of equal magnitude.
///
/// Cluster k holds the coefficient indices c_idx[c_ptr[k] : c_ptr[k+1]] and
/// the shared magnitude c[k]. Magnitudes are strictly decreasing; a zero
/// cluster, when present, is last.
class Clusters
{
public:
  Clusters() = default;

  /// Groups coefficients whose magnitudes differ by at most `tolerance`
  /// (exact equality by default). With a positive tolerance the cluster
  /// magnitude is the largest member magnitude.
  static Clusters from_beta(std::span<const double> beta, double tolerance = 0.0);

  int size() const { return static_cast<int>(c_.size()); }
  /// Number of clusters with nonzero magnitude.
  int n_nonzero() const;
  /// Index of the zero cluster, or -1.
  int zero_cluster() const;
  /// Total number of coefficients.
  int n_coefficients() const { return c_ptr_.empty() ? 0 : c_ptr_.back(); }

  double coeff(int k) const { return c_[static_cast<std::size_t>(k)]; }
  int cluster_size(int k) const
  {
    return c_ptr_[static_cast<std::size_t>(k) + 1] - c_ptr_[static_cast<std::size_t>(k)];
  }
  std::span<const int> indices(int k) const;

  const std::vector<double>& c() const { return c_; }
  const std::vector<int>& c_idx() const { return c_idx_; }
  const std::vector<int>& c_ptr() const { return c_ptr_; }

  /// Index of the cluster with magnitude exactly `magnitude`, or -1.
  int find(double magnitude) const;

  /// Sets the magnitude of cluster k, merging it with the cluster that already
  /// has that magnitude (or the zero cluster) and restoring the descending
  /// order. Only the index range between the old and the new position is
  /// moved. `merge_target`, if given, must name the cluster being merged into.
  void update(int k, double new_magnitude, std::optional<int> merge_target = {});

  /// Magnitude of every coefficient.
  std::vector<double> magnitudes() const;

  /// Checks every structural invariant; returns an empty string when valid.
  std::string validate() const;
  /// Additionally checks |beta_j| == c[k] for all members.
  std::string validate(std::span<const double> beta) const;

  /// Total number of index moves performed by update().
  std::size_t moved_elements() const { return moved_; }

private:
  std::vector<double> c_;
  std::vector<int> c_idx_;
  std::vector<int> c_ptr_{ 0 };
  std::size_t moved_ = 0;
};

/// Rows (coefficient_index, cluster_id, magnitude, sign) as CSV text, one row
/// per coefficient in cluster order.
std::string
cluster_pattern_csv(const Clusters& clusters, std::span<const double> beta);

} // namespace slope
