#include "slope/matrix.hpp"

#include <atomic>
#include <cmath>
#include <functional>

namespace slope {

namespace {

std::atomic<std::size_t> design_copies{ 0 };

void
check_rows(const std::vector<int>& rows, Index n)
{
  if (rows.empty()) {
    throw std::invalid_argument("row subset must not be empty");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= n) {
      throw std::out_of_range("row index out of range");
    }
  }
}

} // namespace

DesignMatrix::DesignMatrix(Eigen::MatrixXd x)
  : data_(std::move(x))
{
  const auto& d = std::get<Eigen::MatrixXd>(data_);
  n_ = d.rows();
  p_ = d.cols();
}

DesignMatrix::DesignMatrix(SparseMatrix x)
  : data_(std::move(x))
{
  auto& s = std::get<SparseMatrix>(data_);
  s.makeCompressed();
  n_ = s.rows();
  p_ = s.cols();
}

DesignMatrix::DesignMatrix(const DesignMatrix& other)
  : data_(other.data_)
  , n_(other.n_)
  , p_(other.p_)
{
  ++design_copies;
}

DesignMatrix&
DesignMatrix::operator=(const DesignMatrix& other)
{
  if (this != &other) {
    data_ = other.data_;
    n_ = other.n_;
    p_ = other.p_;
    ++design_copies;
  }
  return *this;
}

std::size_t
DesignMatrix::copy_count()
{
  return design_copies.load();
}

std::size_t
DesignMatrix::checksum() const
{
  std::size_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::size_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  std::hash<double> hd;
  if (is_sparse()) {
    const auto& s = sparse();
    for (Index j = 0; j < s.cols(); ++j) {
      for (SparseMatrix::InnerIterator it(s, j); it; ++it) {
        mix(static_cast<std::size_t>(it.row()));
        mix(hd(it.value()));
      }
      mix(static_cast<std::size_t>(j));
    }
  } else {
    const auto& d = dense();
    for (Index k = 0; k < d.size(); ++k) {
      mix(hd(d.data()[k]));
    }
  }
  return h;
}

Normalization
Normalization::identity(Index p)
{
  Normalization out;
  out.centers = Eigen::VectorXd::Zero(p);
  out.scales = Eigen::VectorXd::Ones(p);
  return out;
}

Normalization
fit_normalization(const MatrixView& x,
                  Centering centering,
                  Scaling scaling,
                  const Eigen::VectorXd& manual_centers,
                  const Eigen::VectorXd& manual_scales)
{
  const Index p = x.cols();
  const double n = static_cast<double>(x.rows());

  Normalization out = Normalization::identity(p);
  out.centering = centering;
  out.scaling = scaling;

  if (centering == Centering::manual) {
    if (manual_centers.size() != p) {
      throw std::invalid_argument("manual centers must have length p");
    }
    out.centers = manual_centers;
  }
  if (scaling == Scaling::manual) {
    if (manual_scales.size() != p) {
      throw std::invalid_argument("manual scales must have length p");
    }
    if ((manual_scales.array() <= 0.0).any() || !manual_scales.allFinite()) {
      throw std::invalid_argument("manual scales must be positive");
    }
    out.scales = manual_scales;
  }

  if (centering != Centering::mean &&
      (scaling == Scaling::none || scaling == Scaling::manual)) {
    return out;
  }

  for (Index j = 0; j < p; ++j) {
    const Eigen::VectorXd col = x.raw_column(j);
    const double mean = n > 0 ? col.mean() : 0.0;
    if (centering == Centering::mean) {
      out.centers(j) = mean;
    }
    double s = 1.0;
    switch (scaling) {
      case Scaling::sd:
        s = n > 0 ? std::sqrt((col.array() - mean).square().sum() / n) : 0.0;
        break;
      case Scaling::l1:
        s = col.cwiseAbs().sum();
        break;
      case Scaling::l2:
        s = col.norm();
        break;
      case Scaling::max_abs:
        s = n > 0 ? col.cwiseAbs().maxCoeff() : 0.0;
        break;
      case Scaling::none:
      case Scaling::manual:
        continue;
    }
    out.scales(j) = (s > 0.0 && std::isfinite(s)) ? s : 1.0;
  }
  return out;
}

MatrixView::MatrixView(const DesignMatrix& x)
  : MatrixView(x, Normalization::identity(x.cols()))
{
}

MatrixView::MatrixView(const DesignMatrix& x, Normalization norm)
  : x_(&x)
  , norm_(std::move(norm))
  , n_(x.rows())
{
  if (norm_.centers.size() != x.cols() || norm_.scales.size() != x.cols()) {
    throw std::invalid_argument("normalization does not match column count");
  }
}

MatrixView::MatrixView(const DesignMatrix& x, std::vector<int> rows)
  : MatrixView(x, std::move(rows), Normalization::identity(x.cols()))
{
}

MatrixView::MatrixView(const DesignMatrix& x,
                       std::vector<int> rows,
                       Normalization norm)
  : x_(&x)
  , rows_(std::move(rows))
  , norm_(std::move(norm))
  , n_(static_cast<Index>(rows_.size()))
{
  check_rows(rows_, x.rows());
  if (norm_.centers.size() != x.cols() || norm_.scales.size() != x.cols()) {
    throw std::invalid_argument("normalization does not match column count");
  }
  if (x.is_sparse()) {
    local_.assign(static_cast<std::size_t>(x.rows()), -1);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      local_[static_cast<std::size_t>(rows_[i])] = static_cast<int>(i);
    }
  }
}

MatrixView
MatrixView::with_normalization(Normalization norm) const
{
  if (has_row_subset()) {
    return MatrixView(*x_, rows_, std::move(norm));
  }
  return MatrixView(*x_, std::move(norm));
}

void
MatrixView::check_column(Index j) const
{
  if (j < 0 || j >= cols()) {
    throw std::out_of_range("column index out of range");
  }
}

double
MatrixView::column_dot(Index j, const Eigen::Ref<const Eigen::VectorXd>& v) const
{
  return column_dot(j, v, v.sum());
}

double
MatrixView::column_dot(Index j,
                       const Eigen::Ref<const Eigen::VectorXd>& v,
                       double v_sum) const
{
  check_column(j);
  if (v.size() != n_) {
    throw std::invalid_argument("vector length does not match row count");
  }

  double raw = 0.0;
  if (x_->is_sparse()) {
    const auto& s = x_->sparse();
    if (rows_.empty()) {
      for (SparseMatrix::InnerIterator it(s, j); it; ++it) {
        raw += it.value() * v(it.row());
      }
    } else {
      for (SparseMatrix::InnerIterator it(s, j); it; ++it) {
        const int i = local_[static_cast<std::size_t>(it.row())];
        if (i >= 0) {
          raw += it.value() * v(i);
        }
      }
    }
  } else {
    const auto& d = x_->dense();
    if (rows_.empty()) {
      raw = d.col(j).dot(v);
    } else {
      for (Index i = 0; i < n_; ++i) {
        raw += d(rows_[static_cast<std::size_t>(i)], j) * v(i);
      }
    }
  }
  return (raw - norm_.centers(j) * v_sum) / norm_.scales(j);
}

void
MatrixView::add_column(Index j, double a, Eigen::Ref<Eigen::VectorXd> out) const
{
  check_column(j);
  const double scaled = a / norm_.scales(j);
  const double shift = norm_.centers(j) * scaled;

  if (x_->is_sparse()) {
    const auto& s = x_->sparse();
    for (SparseMatrix::InnerIterator it(s, j); it; ++it) {
      const int i = rows_.empty() ? static_cast<int>(it.row())
                                  : local_[static_cast<std::size_t>(it.row())];
      if (i >= 0) {
        out(i) += scaled * it.value();
      }
    }
    if (shift != 0.0) {
      out.array() -= shift;
    }
  } else {
    const auto& d = x_->dense();
    if (rows_.empty()) {
      out += scaled * d.col(j);
    } else {
      for (Index i = 0; i < n_; ++i) {
        out(i) += scaled * d(rows_[static_cast<std::size_t>(i)], j);
      }
    }
    if (shift != 0.0) {
      out.array() -= shift;
    }
  }
}

Eigen::VectorXd
MatrixView::raw_column(Index j) const
{
  check_column(j);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
  if (x_->is_sparse()) {
    const auto& s = x_->sparse();
    for (SparseMatrix::InnerIterator it(s, j); it; ++it) {
      const int i = rows_.empty() ? static_cast<int>(it.row())
                                  : local_[static_cast<std::size_t>(it.row())];
      if (i >= 0) {
        out(i) = it.value();
      }
    }
  } else {
    const auto& d = x_->dense();
    for (Index i = 0; i < n_; ++i) {
      out(i) = rows_.empty() ? d(i, j) : d(rows_[static_cast<std::size_t>(i)], j);
    }
  }
  return out;
}

Eigen::VectorXd
MatrixView::column(Index j) const
{
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
  add_column(j, 1.0, out);
  return out;
}

Eigen::MatrixXd
MatrixView::materialize() const
{
  Eigen::MatrixXd out(n_, cols());
  for (Index j = 0; j < cols(); ++j) {
    out.col(j) = column(j);
  }
  return out;
}

Eigen::MatrixXd
linear_predictor(const MatrixView& x,
                 const Eigen::MatrixXd& beta,
                 const Eigen::VectorXd& beta0)
{
  if (beta.rows() != x.cols() || beta.cols() != beta0.size()) {
    throw std::invalid_argument("coefficient dimensions do not match design");
  }
  const Index n_classes = beta.cols();
  Eigen::MatrixXd eta(x.rows(), n_classes);
  for (Index k = 0; k < n_classes; ++k) {
    eta.col(k).setConstant(beta0(k));
    for (Index j = 0; j < beta.rows(); ++j) {
      if (beta(j, k) != 0.0) {
        x.add_column(j, beta(j, k), eta.col(k));
      }
    }
  }
  return eta;
}

Eigen::MatrixXd
linear_predictor(const MatrixView& x,
                 const SparseMatrix& beta,
                 const Eigen::VectorXd& beta0)
{
  if (beta.rows() != x.cols() || beta.cols() != beta0.size()) {
    throw std::invalid_argument("coefficient dimensions do not match design");
  }
  Eigen::MatrixXd eta(x.rows(), beta.cols());
  for (Index k = 0; k < beta.cols(); ++k) {
    eta.col(k).setConstant(beta0(k));
    for (SparseMatrix::InnerIterator it(beta, k); it; ++it) {
      if (it.value() != 0.0) {
        x.add_column(it.row(), it.value(), eta.col(k));
      }
    }
  }
  return eta;
}

} // namespace slope
