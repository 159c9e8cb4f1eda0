#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace srlg {

// Triangularizes the first lead_cols columns of a block pre-array with
// Householder reflections, applying every reflection to ALL trailing columns
// so that trailing blocks see the same orthogonal transform. Rows whose
// leading diagonal comes out negative are flipped (a diagonal +-1 factor
// folded into the transform, again across all columns) so the leading
// diagonal is nonnegative. Entries below the leading diagonal are written as
// exact zeros.
//
// A leading block that is already upper triangular with nonnegative diagonal
// is returned unchanged: reflections for already-reduced columns are skipped.
template <class S>
Matrix<S> householder_triangularize(Matrix<S> a, int lead_cols) {
  using std::abs;
  using std::sqrt;
  const int rows = a.rows(), cols = a.cols();
  if (lead_cols < 0 || lead_cols > cols)
    throw DimensionError("householder: lead_cols out of range");
  if (lead_cols > rows)
    throw DimensionError("householder: more lead columns than rows");

  std::vector<S> v(rows);
  for (int j = 0; j < lead_cols; ++j) {
    S below(0);
    for (int i = j + 1; i < rows; ++i) below += a(i, j) * a(i, j);
    const S x0 = a(j, j);
    // Already reduced: skip, so clean inputs pass through bitwise. A negative
    // diagonal is corrected by the flip pass below.
    if (below == S(0)) continue;

    const S norm = sqrt(x0 * x0 + below);
    const S alpha = x0 >= S(0) ? -norm : norm;
    v[j] = x0 - alpha;
    for (int i = j + 1; i < rows; ++i) v[i] = a(i, j);
    const S vtv = v[j] * v[j] + below;
    const S beta = S(2) / vtv;

    for (int c = j; c < cols; ++c) {
      S s(0);
      for (int i = j; i < rows; ++i) s += v[i] * a(i, c);
      s = beta * s;
      for (int i = j; i < rows; ++i) a(i, c) -= s * v[i];
    }
    a(j, j) = alpha;  // known exactly; avoid residual roundoff
    for (int i = j + 1; i < rows; ++i) a(i, j) = S(0);
  }

  for (int i = 0; i < lead_cols; ++i) {
    if (a(i, i) < S(0))
      for (int c = 0; c < cols; ++c) a(i, c) = -a(i, c);
    a(i, i) = a(i, i) + S(0);  // normalize -0 to +0
  }
  return a;
}

// Upper Cholesky factor U of a symmetric positive definite A, A = U^T U.
// pivot_rel_tol > 0 additionally rejects pivots at or below
// pivot_rel_tol * max diagonal, the caller's notion of numerical singularity.
template <class S>
UpperTriangular<S> cholesky_upper(const Matrix<S>& a, const S& pivot_rel_tol = S(0)) {
  using std::abs;
  using std::sqrt;
  const int n = a.rows();
  if (n != a.cols()) throw DimensionError("cholesky: not square");
  const S scale = a.max_abs();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (abs(a(i, j) - a(j, i)) > S(1e-12) * scale)
        throw DimensionError("cholesky: matrix not symmetric");

  S max_diag(0);
  for (int i = 0; i < n; ++i)
    if (abs(a(i, i)) > max_diag) max_diag = abs(a(i, i));
  const S floor = pivot_rel_tol * max_diag;

  Matrix<S> u(n, n);
  for (int i = 0; i < n; ++i) {
    S pivot = a(i, i);
    for (int k = 0; k < i; ++k) pivot -= u(k, i) * u(k, i);
    if (pivot <= floor || pivot <= S(0)) throw NotPositiveDefinite(i);
    u(i, i) = sqrt(pivot);
    for (int j = i + 1; j < n; ++j) {
      S s = a(i, j);
      for (int k = 0; k < i; ++k) s -= u(k, i) * u(k, j);
      u(i, j) = s / u(i, i);
    }
  }
  return UpperTriangular<S>(std::move(u));
}

// Directional derivative dU of the upper Cholesky factor of A along a
// symmetric perturbation dA, obtained by differentiating the factorization
// recurrence; satisfies dU^T U + U^T dU = dA. Returned dense with an exactly
// zero lower triangle.
template <class S>
Matrix<S> cholesky_upper_derivative(const Matrix<S>& a, const Matrix<S>& da) {
  using std::abs;
  const int n = a.rows();
  if (da.rows() != n || da.cols() != n)
    throw DimensionError("cholesky derivative: shape mismatch");
  const S dscale = da.max_abs();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (abs(da(i, j) - da(j, i)) > S(1e-12) * dscale)
        throw DimensionError("cholesky derivative: dA not symmetric");

  const Matrix<S> u = cholesky_upper(a).mat();
  Matrix<S> du(n, n);
  for (int i = 0; i < n; ++i) {
    S s = da(i, i);
    for (int k = 0; k < i; ++k) s -= S(2) * u(k, i) * du(k, i);
    du(i, i) = s / (S(2) * u(i, i));
    for (int j = i + 1; j < n; ++j) {
      S t = da(i, j);
      for (int k = 0; k < i; ++k) t -= du(k, i) * u(k, j) + u(k, i) * du(k, j);
      du(i, j) = (t - du(i, i) * u(i, j)) / u(i, i);
    }
  }
  return du;
}

enum class SolveSide {
  Left,            // U X = B
  Right,           // X U = B
  TransposedLeft,  // U^T X = B
};

// Triangular solve against the factor U. Diagonals with magnitude below
// machine epsilon times the factor's largest absolute entry are treated as
// singular.
template <class S>
Matrix<S> solve_upper(const UpperTriangular<S>& uf, const Matrix<S>& b,
                      SolveSide side) {
  using std::abs;
  const Matrix<S>& u = uf.mat();
  const int n = uf.dim();
  const S tol = std::numeric_limits<S>::epsilon() * u.max_abs();
  for (int i = 0; i < n; ++i)
    if (abs(u(i, i)) <= tol) throw SingularFactor(i);

  if (side == SolveSide::Right) {
    if (b.cols() != n) throw DimensionError("solve_upper: shape mismatch");
    Matrix<S> x(b.rows(), n);
    for (int r = 0; r < b.rows(); ++r)
      for (int j = 0; j < n; ++j) {
        S s = b(r, j);
        for (int k = 0; k < j; ++k) s -= x(r, k) * u(k, j);
        x(r, j) = s / u(j, j);
      }
    return x;
  }

  if (b.rows() != n) throw DimensionError("solve_upper: shape mismatch");
  Matrix<S> x(n, b.cols());
  if (side == SolveSide::Left) {
    for (int c = 0; c < b.cols(); ++c)
      for (int i = n - 1; i >= 0; --i) {
        S s = b(i, c);
        for (int k = i + 1; k < n; ++k) s -= u(i, k) * x(k, c);
        x(i, c) = s / u(i, i);
      }
  } else {  // TransposedLeft: forward substitution on U^T
    for (int c = 0; c < b.cols(); ++c)
      for (int i = 0; i < n; ++i) {
        S s = b(i, c);
        for (int k = 0; k < i; ++k) s -= u(k, i) * x(k, c);
        x(i, c) = s / u(i, i);
      }
  }
  return x;
}

template <class S>
struct LduParts {
  Matrix<S> strict_lower, diagonal, strict_upper;
};

// Splits a square matrix into strictly lower, diagonal, and strictly upper
// parts; the three reassemble to the input exactly.
template <class S>
LduParts<S> split_strict_ldu(const Matrix<S>& m) {
  const int n = m.rows();
  if (n != m.cols()) throw DimensionError("ldu split: not square");
  LduParts<S> p{Matrix<S>(n, n), Matrix<S>(n, n), Matrix<S>(n, n)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i > j)
        p.strict_lower(i, j) = m(i, j);
      else if (i == j)
        p.diagonal(i, j) = m(i, j);
      else
        p.strict_upper(i, j) = m(i, j);
    }
  return p;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, unsorted.
template <class S>
std::vector<S> symmetric_eigenvalues(Matrix<S> a) {
  using std::abs;
  using std::sqrt;
  const int n = a.rows();
  if (n != a.cols()) throw DimensionError("eigenvalues: not square");
  for (int sweep = 0; sweep < 60; ++sweep) {
    S off(0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off == S(0)) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const S apq = a(p, q);
        if (apq == S(0)) continue;
        const S tau = (a(q, q) - a(p, p)) / (S(2) * apq);
        const S t = (tau >= S(0) ? S(1) : S(-1)) / (abs(tau) + sqrt(S(1) + tau * tau));
        const S c = S(1) / sqrt(S(1) + t * t), s = t * c;
        for (int k = 0; k < n; ++k) {
          const S akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const S apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<S> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a(i, i);
  return eig;
}

// 2-norm condition estimate of a symmetric matrix: max|lambda| / min|lambda|,
// infinity when the smallest eigenvalue magnitude is zero.
template <class S>
S condition_symmetric(const Matrix<S>& a) {
  using std::abs;
  auto eig = symmetric_eigenvalues(a);
  S lo = abs(eig[0]), hi = abs(eig[0]);
  for (const S& e : eig) {
    if (abs(e) < lo) lo = abs(e);
    if (abs(e) > hi) hi = abs(e);
  }
  if (lo == S(0)) return std::numeric_limits<S>::infinity();
  return hi / lo;
}

// Singular values by one-sided Jacobi (column orthogonalization). Stays
// accurate for tiny singular values of triangular factors, where forming
// A^T A first would square away the information.
template <class S>
std::vector<S> singular_values(Matrix<S> a) {
  using std::abs;
  using std::sqrt;
  const int m = a.rows(), n = a.cols();
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        S app(0), aqq(0), apq(0);
        for (int i = 0; i < m; ++i) {
          app += a(i, p) * a(i, p);
          aqq += a(i, q) * a(i, q);
          apq += a(i, p) * a(i, q);
        }
        if (apq == S(0)) continue;
        if (abs(apq) <= std::numeric_limits<S>::epsilon() * sqrt(app * aqq))
          continue;
        const S tau = (aqq - app) / (S(2) * apq);
        const S t = (tau >= S(0) ? S(1) : S(-1)) / (abs(tau) + sqrt(S(1) + tau * tau));
        const S c = S(1) / sqrt(S(1) + t * t), s = t * c;
        for (int i = 0; i < m; ++i) {
          const S aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        rotated = true;
      }
    if (!rotated) break;
  }
  std::vector<S> sv(n);
  for (int j = 0; j < n; ++j) {
    S s(0);
    for (int i = 0; i < m; ++i) s += a(i, j) * a(i, j);
    sv[j] = sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), [](const S& x, const S& y) { return x > y; });
  return sv;
}

// ln(2*pi) at the scalar's own precision (8*atan(1) = 2*pi).
template <class S>
S log_two_pi() {
  using std::atan;
  using std::log;
  return log(S(8) * atan(S(1)));
}

}  // namespace srlg
