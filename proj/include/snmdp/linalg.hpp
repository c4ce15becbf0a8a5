#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace snmdp {

using Vector = std::vector<double>;

/// Dense row-major matrix. Only what the solvers need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double norm_inf(std::span<const double> v) {
  double out = 0.0;
  for (double x : v) out = std::max(out, std::abs(x));
  return out;
}

/// Largest absolute row sum.
inline double norm_inf(const Matrix& a) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double sum = 0.0;
    for (double x : a.row(i)) sum += std::abs(x);
    out = std::max(out, sum);
  }
  return out;
}

inline double distance_inf(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("distance_inf: length mismatch");
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

inline Vector multiply(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("multiply: shape mismatch");
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * x[j];
    out[i] = acc;
  }
  return out;
}

/// Raised when elimination meets an exactly zero pivot.
class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(std::size_t pivot)
      : std::runtime_error("singular matrix: zero pivot in column " + std::to_string(pivot)),
        pivot_(pivot) {}
  std::size_t pivot() const { return pivot_; }

 private:
  std::size_t pivot_;
};

/**
 * LU factorization with partial (row) pivoting, PA = LU.
 *
 * L is unit lower triangular and shares storage with U. The factorization
 * is computed once and can be applied to any number of right-hand sides.
 */
class LuFactorization {
 public:
  explicit LuFactorization(Matrix a) : lu_(std::move(a)), perm_(lu_.rows()) {
    if (!lu_.square()) throw std::invalid_argument("LuFactorization: matrix is not square");
    const std::size_t n = lu_.rows();
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          p = i;
        }
      }
      if (best == 0.0) throw SingularMatrixError(k);
      if (p != k) {
        std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(p).begin());
        std::swap(perm_[k], perm_[p]);
      }
      const double pivot = lu_(k, k);
      auto pivot_row = lu_.row(k);
      for (std::size_t i = k + 1; i < n; ++i) {
        auto r = lu_.row(i);
        const double factor = r[k] / pivot;
        r[k] = factor;
        if (factor == 0.0) continue;
        for (std::size_t j = k + 1; j < n; ++j) r[j] -= factor * pivot_row[j];
      }
    }
  }

  std::size_t size() const { return lu_.rows(); }

  Vector solve(std::span<const double> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw std::invalid_argument("LuFactorization::solve: length mismatch");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = b[perm_[i]];
      auto r = lu_.row(i);
      for (std::size_t j = 0; j < i; ++j) acc -= r[j] * x[j];
      x[i] = acc;
    }
    for (std::size_t i = n; i-- > 0;) {
      double acc = x[i];
      auto r = lu_.row(i);
      for (std::size_t j = i + 1; j < n; ++j) acc -= r[j] * x[j];
      x[i] = acc / r[i];
    }
    return x;
  }

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
};

/// Solves A x = b by LU with partial pivoting. Throws SingularMatrixError.
inline Vector linear_solve(const Matrix& a, std::span<const double> b) {
  if (!a.square()) throw std::invalid_argument("linear_solve: matrix is not square");
  if (a.rows() != b.size()) throw std::invalid_argument("linear_solve: length mismatch");
  return LuFactorization(a).solve(b);
}

}  // namespace snmdp
