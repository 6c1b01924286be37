#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "gmix/autodiff.hpp"
#include "gmix/errors.hpp"

namespace gmix {

// Row-major dense matrix over any scalar flavor (double, Ad, Dual). Entries
// are value-initialized; code building Ad matrices must assign every entry
// before use.
template <class T>
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}
  Mat(std::size_t rows, std::size_t cols, const T& fill)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

// Packed lower triangle (diagonal included), row by row:
// (0,0), (1,0), (1,1), (2,0), ...
inline std::size_t tri_size(std::size_t p) { return p * (p + 1) / 2; }
inline std::size_t tri_index(std::size_t i, std::size_t j) {
  return i * (i + 1) / 2 + j;
}

// Strictly lower triangle, row by row: (1,0), (2,0), (2,1), ...
inline std::size_t strict_tri_size(std::size_t p) { return p * (p - 1) / 2; }
inline std::size_t strict_tri_index(std::size_t i, std::size_t j) {
  return i * (i - 1) / 2 + j;
}

template <class T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
  if (a.cols() != b.rows() || a.cols() == 0) {
    throw InvalidInput("matmul: inner dimensions must agree and be nonzero");
  }
  Mat<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      T acc = a(i, 0) * b(0, j);
      for (std::size_t k = 1; k < a.cols(); ++k) {
        acc += a(i, k) * b(k, j);
      }
      c(i, j) = acc;
    }
  }
  return c;
}

template <class T>
Mat<T> transpose(const Mat<T>& a) {
  Mat<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      t(j, i) = a(i, j);
    }
  }
  return t;
}

// Solves A X = B by Gaussian elimination with partial pivoting. Pivot rows
// are chosen on stored values (val), so for tape scalars the recorded graph
// is differentiable at the chosen pivoting. A and B are taken by value and
// consumed.
template <class T>
Mat<T> gauss_solve(Mat<T> a, Mat<T> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) {
    throw InvalidInput("gauss_solve: dimension mismatch");
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    double best = std::abs(val(a(c, c)));
    for (std::size_t r = c + 1; r < n; ++r) {
      const double cand = std::abs(val(a(r, c)));
      if (cand > best) {
        best = cand;
        piv = r;
      }
    }
    if (best == 0.0) {
      throw NumericError("gauss_solve: singular matrix");
    }
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
      for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(c, j), b(piv, j));
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      T factor = a(r, c) / a(c, c);
      for (std::size_t j = c + 1; j < n; ++j) {
        a(r, j) -= factor * a(c, j);
      }
      for (std::size_t j = 0; j < b.cols(); ++j) {
        b(r, j) -= factor * b(c, j);
      }
    }
  }
  Mat<T> x = std::move(b);
  for (std::size_t c = n; c-- > 0;) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      T acc = x(c, j);
      for (std::size_t k = c + 1; k < n; ++k) {
        acc -= a(c, k) * x(k, j);
      }
      x(c, j) = acc / a(c, c);
    }
  }
  return x;
}

// Lower Cholesky factor of a symmetric positive-definite matrix. A
// non-positive pivot surfaces as the sqrt op's domain error.
template <class T>
Mat<T> chol_lower(const Mat<T>& s) {
  const std::size_t n = s.rows();
  if (s.cols() != n || n == 0) {
    throw InvalidInput("chol_lower: matrix must be square and nonempty");
  }
  Mat<T> l = s;
  for (std::size_t j = 0; j < n; ++j) {
    T diag = l(j, j);
    for (std::size_t k = 0; k < j; ++k) {
      diag -= l(j, k) * l(j, k);
    }
    if (!(val(diag) > 0.0)) {
      throw NumericError("chol_lower: matrix not positive definite");
    }
    l(j, j) = sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      T acc = l(i, j);
      for (std::size_t k = 0; k < j; ++k) {
        acc -= l(i, k) * l(j, k);
      }
      l(i, j) = acc / l(j, j);
    }
    for (std::size_t k = j + 1; k < n; ++k) {
      l(j, k) = l(j, j) * 0.0;
    }
  }
  return l;
}

// Solves L y = r for lower-triangular L.
template <class T>
std::vector<T> forward_solve(const Mat<T>& l, std::vector<T> r) {
  const std::size_t n = l.rows();
  if (r.size() != n) {
    throw InvalidInput("forward_solve: dimension mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    T acc = r[i];
    for (std::size_t j = 0; j < i; ++j) {
      acc -= l(i, j) * r[j];
    }
    r[i] = acc / l(i, i);
  }
  return r;
}

}  // namespace gmix
