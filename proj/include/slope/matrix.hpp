#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace slope {

using Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// n x p predictor storage, either dense column-major or compressed sparse
/// column. Copies are counted so callers can assert that no per-fold or
/// per-solve duplication of the data takes place.
class DesignMatrix
{
public:
  explicit DesignMatrix(Eigen::MatrixXd x);
  explicit DesignMatrix(SparseMatrix x);

  DesignMatrix(const DesignMatrix& other);
  DesignMatrix& operator=(const DesignMatrix& other);
  DesignMatrix(DesignMatrix&&) noexcept = default;
  DesignMatrix& operator=(DesignMatrix&&) noexcept = default;

  Index rows() const { return n_; }
  Index cols() const { return p_; }
  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(data_); }

  const Eigen::MatrixXd& dense() const { return std::get<Eigen::MatrixXd>(data_); }
  const SparseMatrix& sparse() const { return std::get<SparseMatrix>(data_); }

  /// Order-dependent hash of the stored values and structure.
  std::size_t checksum() const;

  /// Number of DesignMatrix copies made in this process.
  static std::size_t copy_count();

private:
  std::variant<Eigen::MatrixXd, SparseMatrix> data_;
  Index n_ = 0;
  Index p_ = 0;
};

enum class Centering
{
  none,
  mean,
  manual
};

enum class Scaling
{
  none,
  sd,
  l1,
  l2,
  max_abs,
  manual
};

struct Normalization
{
  Centering centering = Centering::none;
  Scaling scaling = Scaling::none;
  Eigen::VectorXd centers;
  Eigen::VectorXd scales;

  /// Identity normalization for p columns.
  static Normalization identity(Index p);
};

class MatrixView;

/// Computes centers and scales over the rows of `x`. `sd` is the population
/// standard deviation; columns with zero scale get scale 1.
Normalization
fit_normalization(const MatrixView& x,
                  Centering centering,
                  Scaling scaling,
                  const Eigen::VectorXd& manual_centers = {},
                  const Eigen::VectorXd& manual_scales = {});

/// Read-only view of a design matrix restricted to a subset of rows, with
/// centering and scaling applied on access. The stored data is never
/// modified or materialized.
class MatrixView
{
public:
  MatrixView(const DesignMatrix& x);
  MatrixView(const DesignMatrix& x, Normalization norm);
  MatrixView(const DesignMatrix& x, std::vector<int> rows);
  MatrixView(const DesignMatrix& x, std::vector<int> rows, Normalization norm);

  Index rows() const { return n_; }
  Index cols() const { return x_->cols(); }
  bool is_sparse() const { return x_->is_sparse(); }
  bool has_row_subset() const { return !rows_.empty(); }

  const DesignMatrix& data() const { return *x_; }
  const Normalization& normalization() const { return norm_; }
  const std::vector<int>& row_indices() const { return rows_; }

  /// Same rows, different normalization.
  MatrixView with_normalization(Normalization norm) const;

  /// Sum_i xnorm_ij v_i.
  double column_dot(Index j, const Eigen::Ref<const Eigen::VectorXd>& v) const;
  /// Variant with the sum of v supplied by the caller.
  double column_dot(Index j,
                    const Eigen::Ref<const Eigen::VectorXd>& v,
                    double v_sum) const;

  /// out += a * xnorm_j
  void add_column(Index j, double a, Eigen::Ref<Eigen::VectorXd> out) const;

  /// Raw (unnormalized) column restricted to the view's rows.
  Eigen::VectorXd raw_column(Index j) const;
  /// Normalized column restricted to the view's rows.
  Eigen::VectorXd column(Index j) const;
  /// Dense normalized copy; intended for tests and small problems.
  Eigen::MatrixXd materialize() const;

private:
  void check_column(Index j) const;

  const DesignMatrix* x_;
  std::vector<int> rows_;
  std::vector<int> local_; // full row -> view row, -1 if excluded (sparse only)
  Normalization norm_;
  Index n_;
};

/// eta = beta0 + X beta, one column per modeled class. `beta` is p x K.
Eigen::MatrixXd
linear_predictor(const MatrixView& x,
                 const Eigen::MatrixXd& beta,
                 const Eigen::VectorXd& beta0);

Eigen::MatrixXd
linear_predictor(const MatrixView& x,
                 const SparseMatrix& beta,
                 const Eigen::VectorXd& beta0);

class DataError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct Dataset
{
  DesignMatrix x;
  Eigen::VectorXd y;
  std::vector<std::string> names;
};

struct CsvOptions
{
  bool header = true;
  char delimiter = ',';
  /// Column holding the response: a header name or a zero-based index.
  std::string response;
};

Dataset
read_csv(const std::string& path, const CsvOptions& options);

/// libsvm/svmlight text: `label idx:val ...` with 1-based indices.
/// `n_features` pads the column count when positive.
Dataset
read_libsvm(const std::string& path, Index n_features = 0);

/// One value per line, blank lines ignored.
std::vector<double>
read_values(const std::string& path);

} // namespace slope
