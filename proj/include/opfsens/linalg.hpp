#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace opfsens {

/// Project-wide relative tolerance for rank and independence decisions.
inline constexpr double kDefaultRankTolerance = 1e-10;

/// Dense row-major matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix column(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> values() const noexcept { return data_; }

  /// Resizes to rows x cols and zero-fills, reusing storage when possible.
  void assign(std::size_t rows, std::size_t cols);

  DenseMatrix transpose() const;
  DenseMatrix select_rows(std::span<const std::size_t> indices) const;
  DenseMatrix select_cols(std::span<const std::size_t> indices) const;
  DenseMatrix block(std::size_t row0, std::size_t col0, std::size_t rows,
                    std::size_t cols) const;

  /// Maximum absolute row sum.
  double norm_inf() const;
  /// Maximum absolute column sum.
  double norm_one() const;
  double max_abs() const;
  bool all_finite() const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);
std::vector<double> multiply(const DenseMatrix& a, std::span<const double> x);
std::vector<double> multiply_transpose(const DenseMatrix& a, std::span<const double> x);
double norm_inf(std::span<const double> x);

/// LU factorization with partial pivoting, PA = LU.
///
/// Factoring never throws: a zero column is recorded as a zero pivot and
/// callers decide what counts as singular via the pivot accessors.
class LuFactorization {
 public:
  LuFactorization() = default;
  explicit LuFactorization(DenseMatrix a);

  /// Refactor in place, reusing storage.
  void factor(const DenseMatrix& a);

  std::size_t size() const noexcept { return lu_.rows(); }
  double min_abs_pivot() const noexcept { return min_pivot_; }
  double max_abs_pivot() const noexcept { return max_pivot_; }

  /// True when every pivot exceeds rel_tol times the largest pivot.
  bool full_rank(double rel_tol = kDefaultRankTolerance) const noexcept;

  DenseMatrix solve(const DenseMatrix& rhs) const;
  std::vector<double> solve(std::span<const double> rhs) const;
  /// Solves A^T x = rhs.
  std::vector<double> solve_transpose(std::span<const double> rhs) const;
  DenseMatrix inverse() const;

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
  double min_pivot_ = 0.0;
  double max_pivot_ = 0.0;
};

/// Solves A X = rhs. Throws Singular when a pivot falls below
/// 1e-12 * ||A||_inf.
DenseMatrix factor_solve(const DenseMatrix& a, const DenseMatrix& rhs);

/// Number of row-echelon pivots whose magnitude exceeds rel_tol times the
/// largest pivot.
std::size_t numerical_rank(const DenseMatrix& a, double rel_tol = kDefaultRankTolerance);

}  // namespace opfsens
