#pragma once

#include <cmath>
#include <initializer_list>
#include <type_traits>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace srlg {

// Dense row-major matrix over a real scalar type S (double or a
// multiprecision type). Column vectors are n-by-1 matrices; there is no
// separate vector class. Sizes here are tiny, so clarity wins over blocking
// or expression tricks.
template <class S>
class Matrix {
 public:
  Matrix() = default;

  Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) throw DimensionError("negative matrix size");
    a_.assign(static_cast<size_t>(rows) * cols, S(0));
  }

  // Literal entries are written as doubles and widen exactly into S.
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = static_cast<int>(rows.size());
    cols_ = rows_ ? static_cast<int>(rows.begin()->size()) : 0;
    a_.reserve(static_cast<size_t>(rows_) * cols_);
    for (const auto& r : rows) {
      if (static_cast<int>(r.size()) != cols_)
        throw DimensionError("ragged initializer");
      for (double v : r) a_.push_back(S(v));
    }
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = S(1);
    return m;
  }

  static Matrix column(std::initializer_list<double> values) {
    Matrix m(static_cast<int>(values.size()), 1);
    int i = 0;
    for (double v : values) m(i++, 0) = S(v);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return a_.empty(); }

  S& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  const S& operator()(int i, int j) const {
    return a_[static_cast<size_t>(i) * cols_ + j];
  }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix block(int i0, int j0, int nr, int nc) const {
    if (i0 < 0 || j0 < 0 || i0 + nr > rows_ || j0 + nc > cols_)
      throw DimensionError("block out of range");
    Matrix b(nr, nc);
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nc; ++j) b(i, j) = (*this)(i0 + i, j0 + j);
    return b;
  }

  void set_block(int i0, int j0, const Matrix& b) {
    if (i0 < 0 || j0 < 0 || i0 + b.rows() > rows_ || j0 + b.cols() > cols_)
      throw DimensionError("block out of range");
    for (int i = 0; i < b.rows(); ++i)
      for (int j = 0; j < b.cols(); ++j) (*this)(i0 + i, j0 + j) = b(i, j);
  }

  S max_abs() const {
    using std::abs;
    S m(0);
    for (const S& v : a_)
      if (abs(v) > m) m = abs(v);
    return m;
  }

  S frobenius() const {
    using std::sqrt;
    S s(0);
    for (const S& v : a_) s += v * v;
    return sqrt(s);
  }

  bool all_finite() const {
    using std::isfinite;
    for (const S& v : a_)
      if (!isfinite(v)) return false;
    return true;
  }

  Matrix symmetrized() const {
    if (rows_ != cols_) throw DimensionError("symmetrized: not square");
    Matrix s(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        s(i, j) = ((*this)(i, j) + (*this)(j, i)) / S(2);
    return s;
  }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_;
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<S> a_;
};

template <class S>
Matrix<S> operator+(const Matrix<S>& a, const Matrix<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("matrix add: shape mismatch");
  Matrix<S> c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(i, j);
  return c;
}

template <class S>
Matrix<S> operator-(const Matrix<S>& a, const Matrix<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("matrix subtract: shape mismatch");
  Matrix<S> c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

template <class S>
Matrix<S> operator-(const Matrix<S>& a) {
  Matrix<S> c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = -a(i, j);
  return c;
}

template <class S>
Matrix<S> operator*(const Matrix<S>& a, const Matrix<S>& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matrix multiply: inner dimension mismatch");
  Matrix<S> c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const S& aik = a(i, k);
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

template <class S>
Matrix<S> operator*(const S& s, const Matrix<S>& a) {
  Matrix<S> c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = s * a(i, j);
  return c;
}

// Convenience for wide scalars, so literals scale without an explicit cast.
template <class S>
  requires(!std::is_same_v<S, double>)
Matrix<S> operator*(double s, const Matrix<S>& a) {
  return S(s) * a;
}

// Inner product of two column vectors.
template <class S>
S dot(const Matrix<S>& a, const Matrix<S>& b) {
  if (a.cols() != 1 || b.cols() != 1 || a.rows() != b.rows())
    throw DimensionError("dot: arguments must be equal-length columns");
  S s(0);
  for (int i = 0; i < a.rows(); ++i) s += a(i, 0) * b(i, 0);
  return s;
}

// Square matrix whose strictly lower triangle is exactly zero. Construction
// validates; use truncate() to deliberately drop a lower triangle.
template <class S>
class UpperTriangular {
 public:
  UpperTriangular() = default;

  explicit UpperTriangular(Matrix<S> m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols())
      throw DimensionError("upper triangular: not square");
    for (int i = 1; i < m_.rows(); ++i)
      for (int j = 0; j < i; ++j)
        if (!(m_(i, j) == S(0)))
          throw DimensionError("upper triangular: nonzero below diagonal");
  }

  static UpperTriangular truncate(Matrix<S> m) {
    if (m.rows() != m.cols())
      throw DimensionError("upper triangular: not square");
    for (int i = 1; i < m.rows(); ++i)
      for (int j = 0; j < i; ++j) m(i, j) = S(0);
    return UpperTriangular(std::move(m));
  }

  int dim() const { return m_.rows(); }
  const Matrix<S>& mat() const& { return m_; }
  // Binding mat() of a temporary to a reference would dangle; move instead.
  Matrix<S> mat() && { return std::move(m_); }
  const S& operator()(int i, int j) const { return m_(i, j); }

 private:
  Matrix<S> m_;
};

}  // namespace srlg
