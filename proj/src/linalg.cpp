#include "opfsens/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "opfsens/error.hpp"

namespace opfsens {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw Error(ErrorKind::DimensionMismatch, "ragged matrix literal");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::column(std::span<const double> values) {
  DenseMatrix m(values.size(), 1);
  std::copy(values.begin(), values.end(), m.data_.begin());
  return m;
}

void DenseMatrix::assign(std::size_t rows, std::size_t cols) {
  rows_ = rows;
  cols_ = cols;
  data_.assign(rows * cols, 0.0);
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

DenseMatrix DenseMatrix::select_rows(std::span<const std::size_t> indices) const {
  DenseMatrix out(indices.size(), cols_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

DenseMatrix DenseMatrix::select_cols(std::span<const std::size_t> indices) const {
  DenseMatrix out(rows_, indices.size());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = 0; k < indices.size(); ++k) out(r, k) = (*this)(r, indices[k]);
  return out;
}

DenseMatrix DenseMatrix::block(std::size_t row0, std::size_t col0, std::size_t rows,
                               std::size_t cols) const {
  if (row0 + rows > rows_ || col0 + cols > cols_) {
    throw Error(ErrorKind::DimensionMismatch, "block out of range");
  }
  DenseMatrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = (*this)(row0 + r, col0 + c);
  return out;
}

double DenseMatrix::norm_inf() const {
  double best = 0.0;
  for (std::size_t r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (double v : row(r)) s += std::abs(v);
    best = std::max(best, s);
  }
  return best;
}

double DenseMatrix::norm_one() const {
  std::vector<double> sums(cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) sums[c] += std::abs((*this)(r, c));
  return sums.empty() ? 0.0 : *std::max_element(sums.begin(), sums.end());
}

double DenseMatrix::max_abs() const {
  double best = 0.0;
  for (double v : data_) best = std::max(best, std::abs(v));
  return best;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "matrix product shape mismatch");
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

namespace {

template <class Op>
DenseMatrix elementwise(const DenseMatrix& a, const DenseMatrix& b, Op op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "elementwise shape mismatch");
  }
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = op(a(r, c), b(r, c));
  return out;
}

}  // namespace

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  return elementwise(a, b, std::plus<>{});
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  return elementwise(a, b, std::minus<>{});
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix out = a;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (double& v : out.row(r)) v *= s;
  return out;
}

std::vector<double> multiply(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw Error(ErrorKind::DimensionMismatch, "matrix-vector shape mismatch");
  }
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    auto arow = a.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) s += arow[c] * x[c];
    y[r] = s;
  }
  return y;
}

std::vector<double> multiply_transpose(const DenseMatrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) {
    throw Error(ErrorKind::DimensionMismatch, "transpose product shape mismatch");
  }
  std::vector<double> y(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    if (x[r] == 0.0) continue;
    auto arow = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) y[c] += arow[c] * x[r];
  }
  return y;
}

double norm_inf(std::span<const double> x) {
  double best = 0.0;
  for (double v : x) best = std::max(best, std::abs(v));
  return best;
}

LuFactorization::LuFactorization(DenseMatrix a) { factor(a); }

void LuFactorization::factor(const DenseMatrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "LU requires a square matrix");
  }
  const std::size_t n = a.rows();
  lu_ = a;
  perm_.resize(n);
  for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
  min_pivot_ = n == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  max_pivot_ = 0.0;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::abs(lu_(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (p != k) {
      auto rk = lu_.row(k);
      auto rp = lu_.row(p);
      std::swap_ranges(rk.begin(), rk.end(), rp.begin());
      std::swap(perm_[k], perm_[p]);
    }
    min_pivot_ = std::min(min_pivot_, best);
    max_pivot_ = std::max(max_pivot_, best);
    if (best == 0.0) continue;
    const double pivot = lu_(k, k);
    auto rk = lu_.row(k);
    for (std::size_t i = k + 1; i < n; ++i) {
      auto ri = lu_.row(i);
      const double factor = ri[k] / pivot;
      ri[k] = factor;
      if (factor == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) ri[j] -= factor * rk[j];
    }
  }
}

bool LuFactorization::full_rank(double rel_tol) const noexcept {
  if (size() == 0) return true;
  return max_pivot_ > 0.0 && min_pivot_ > rel_tol * max_pivot_;
}

std::vector<double> LuFactorization::solve(std::span<const double> rhs) const {
  const std::size_t n = size();
  if (rhs.size() != n) throw Error(ErrorKind::DimensionMismatch, "LU solve rhs size");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[perm_[i]];
  for (std::size_t i = 0; i < n; ++i) {
    auto ri = lu_.row(i);
    double s = x[i];
    for (std::size_t j = 0; j < i; ++j) s -= ri[j] * x[j];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    auto ri = lu_.row(i);
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= ri[j] * x[j];
    x[i] = s / ri[i];
  }
  return x;
}

std::vector<double> LuFactorization::solve_transpose(std::span<const double> rhs) const {
  // A^T = U^T L^T P, so solve U^T z = rhs, L^T w = z, x = P^T w.
  const std::size_t n = size();
  if (rhs.size() != n) throw Error(ErrorKind::DimensionMismatch, "LU solve rhs size");
  std::vector<double> z(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = z[i];
    for (std::size_t j = 0; j < i; ++j) s -= lu_(j, i) * z[j];
    z[i] = s / lu_(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = z[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu_(j, i) * z[j];
    z[i] = s;
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[perm_[i]] = z[i];
  return x;
}

DenseMatrix LuFactorization::solve(const DenseMatrix& rhs) const {
  if (rhs.rows() != size()) throw Error(ErrorKind::DimensionMismatch, "LU solve rhs rows");
  DenseMatrix out(rhs.rows(), rhs.cols());
  std::vector<double> col(rhs.rows());
  for (std::size_t c = 0; c < rhs.cols(); ++c) {
    for (std::size_t r = 0; r < rhs.rows(); ++r) col[r] = rhs(r, c);
    auto x = solve(col);
    for (std::size_t r = 0; r < rhs.rows(); ++r) out(r, c) = x[r];
  }
  return out;
}

DenseMatrix LuFactorization::inverse() const { return solve(DenseMatrix::identity(size())); }

DenseMatrix factor_solve(const DenseMatrix& a, const DenseMatrix& rhs) {
  if (a.rows() != a.cols() || rhs.rows() != a.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "factor_solve shape mismatch");
  }
  LuFactorization lu(a);
  if (a.rows() > 0 && lu.min_abs_pivot() < 1e-12 * a.norm_inf()) {
    throw Error(ErrorKind::Singular, "matrix is singular to working precision");
  }
  return lu.solve(rhs);
}

std::size_t numerical_rank(const DenseMatrix& a, double rel_tol) {
  if (a.empty()) return 0;
  DenseMatrix m = a;
  const double scale = a.max_abs();
  if (scale == 0.0) return 0;
  std::vector<double> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
    std::size_t p = r;
    double best = std::abs(m(r, c));
    for (std::size_t i = r + 1; i < m.rows(); ++i) {
      if (std::abs(m(i, c)) > best) {
        best = std::abs(m(i, c));
        p = i;
      }
    }
    if (best <= rel_tol * scale) continue;
    if (p != r) {
      auto rr = m.row(r);
      auto rp = m.row(p);
      std::swap_ranges(rr.begin(), rr.end(), rp.begin());
    }
    for (std::size_t i = r + 1; i < m.rows(); ++i) {
      const double f = m(i, c) / m(r, c);
      if (f == 0.0) continue;
      for (std::size_t j = c; j < m.cols(); ++j) m(i, j) -= f * m(r, j);
    }
    pivots.push_back(best);
    ++r;
  }
  if (pivots.empty()) return 0;
  const double largest = *std::max_element(pivots.begin(), pivots.end());
  return static_cast<std::size_t>(std::count_if(
      pivots.begin(), pivots.end(), [&](double p) { return p > rel_tol * largest; }));
}

}  // namespace opfsens
