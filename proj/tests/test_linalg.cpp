#include <catch2/catch_amalgamated.hpp>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>

#include "srlg/kernels.hpp"
#include "srlg/matrix.hpp"

using namespace srlg;
using Mat = Matrix<double>;

namespace {

Mat random_matrix(std::mt19937_64& rng, int r, int c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

Mat random_spd(std::mt19937_64& rng, int n) {
  Mat m = random_matrix(rng, n, n);
  Mat a = m.transposed() * m;
  for (int i = 0; i < n; ++i) a(i, i) += n;
  return a;
}

double max_abs_diff(const Mat& a, const Mat& b) { return (a - b).max_abs(); }

}  // namespace

TEST_CASE("householder reduces a single column to its norm") {
  Mat pre{{3.0}, {4.0}};
  Mat post = householder_triangularize(pre, 1);
  CHECK(post(0, 0) == 5.0);  // sqrt(9 + 16) is exact
  CHECK(post(1, 0) == 0.0);
}

TEST_CASE("householder applies the same transform to trailing columns") {
  // Independent oracle: reflect by hand. x = (3,4), alpha = -5,
  // v = (8,4), beta = 2/80. Trailing column (1,2) maps to
  // (1,2) - beta*(v.(1,2))*v = (-2.2, 0.4); the negative diagonal then flips
  // row 0, giving [[5, 2.2], [0, 0.4]].
  Mat pre{{3.0, 1.0}, {4.0, 2.0}};
  Mat post = householder_triangularize(pre, 1);
  CHECK(post(0, 0) == Catch::Approx(5.0).margin(1e-14));
  CHECK(post(0, 1) == Catch::Approx(2.2).margin(1e-14));
  CHECK(post(1, 0) == 0.0);
  CHECK(post(1, 1) == Catch::Approx(0.4).margin(1e-14));
}

TEST_CASE("householder leaves a reduced array unchanged bitwise") {
  Mat pre{{2.0, 0.5, -1.0, 3.0},
          {0.0, 1.5, 0.25, -2.0},
          {0.0, 0.0, 0.75, 0.125}};
  Mat post = householder_triangularize(pre, 3);
  CHECK(post == pre);
}

TEST_CASE("householder preserves the Gram matrix and writes exact zeros") {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 8; ++rep) {
    Mat pre = random_matrix(rng, 6, 4);
    Mat post = householder_triangularize(pre, 4);

    Mat gpre = pre.transposed() * pre;
    Mat gpost = post.transposed() * post;
    CHECK(max_abs_diff(gpre, gpost) <= 1e-13 * gpre.max_abs());

    for (int j = 0; j < 4; ++j) {
      CHECK(post(j, j) >= 0.0);
      for (int i = j + 1; i < 6; ++i) CHECK(post(i, j) == 0.0);
    }
  }
}

TEST_CASE("householder keeps zero columns exactly zero") {
  Mat pre(5, 3);
  pre(0, 0) = 1.0;
  pre(3, 0) = -2.0;
  pre(2, 2) = 4.0;  // middle column is all zeros
  Mat post = householder_triangularize(pre, 3);
  for (int i = 0; i < 5; ++i) CHECK(post(i, 1) == 0.0);
  CHECK(post.all_finite());
}

TEST_CASE("householder rejects more lead columns than rows") {
  Mat pre(2, 3);
  CHECK_THROWS_AS(householder_triangularize(pre, 3), DimensionError);
}

TEST_CASE("cholesky of the identity is the identity") {
  Mat i3 = Mat::identity(3);
  CHECK(cholesky_upper(i3).mat() == i3);
}

TEST_CASE("cholesky matches the hand-factored 2x2") {
  Mat a{{4.0, 2.0}, {2.0, 3.0}};
  auto u = cholesky_upper(a);
  CHECK(u(0, 0) == 2.0);
  CHECK(u(0, 1) == 1.0);
  CHECK(u(1, 0) == 0.0);
  CHECK(u(1, 1) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("cholesky reconstructs random SPD matrices") {
  std::mt19937_64 rng(62);
  for (int rep = 0; rep < 8; ++rep) {
    Mat a = random_spd(rng, 5);
    Mat u = cholesky_upper(a).mat();
    CHECK(max_abs_diff(u.transposed() * u, a) <= 1e-13 * a.max_abs());
  }
}

TEST_CASE("cholesky rejects indefinite and asymmetric input") {
  Mat indef{{1.0, 2.0}, {2.0, 1.0}};
  CHECK_THROWS_MATCHES(cholesky_upper(indef), NotPositiveDefinite,
                       Catch::Matchers::Predicate<NotPositiveDefinite>(
                           [](const auto& e) { return e.index == 1; }));
  Mat asym{{1.0, 0.5}, {0.2, 1.0}};
  CHECK_THROWS_AS(cholesky_upper(asym), DimensionError);
}

TEST_CASE("cholesky pivot floor flags near-singular matrices") {
  Mat a{{1.0, 1.0}, {1.0, 1.0 + 1e-13}};
  CHECK_THROWS_AS(cholesky_upper(a, 1e-10), NotPositiveDefinite);
  CHECK_NOTHROW(cholesky_upper(a));  // strictly positive pivot still factors
}

TEST_CASE("cholesky derivative matches the hand-differentiated 2x2") {
  Mat a{{4.0, 2.0}, {2.0, 3.0}};
  Mat da = Mat::identity(2);
  Mat du = cholesky_upper_derivative(a, da);
  CHECK(du(0, 0) == Catch::Approx(0.25).margin(1e-15));
  CHECK(du(0, 1) == Catch::Approx(-0.125).margin(1e-15));
  CHECK(du(1, 0) == 0.0);
  CHECK(du(1, 1) == Catch::Approx(0.441941738241592).margin(1e-14));
}

TEST_CASE("cholesky derivative satisfies dU'U + U'dU = dA") {
  std::mt19937_64 rng(63);
  for (int rep = 0; rep < 8; ++rep) {
    Mat a = random_spd(rng, 4);
    Mat s = random_matrix(rng, 4, 4);
    Mat da = s + s.transposed();
    Mat u = cholesky_upper(a).mat();
    Mat du = cholesky_upper_derivative(a, da);
    Mat resid = du.transposed() * u + u.transposed() * du - da;
    CHECK(resid.max_abs() <= 1e-12 * da.max_abs());
  }
}

TEST_CASE("cholesky derivative agrees with central differences") {
  std::mt19937_64 rng(64);
  Mat a = random_spd(rng, 4);
  Mat s = random_matrix(rng, 4, 4);
  Mat da = s + s.transposed();
  const double h = 1e-6;
  Mat up = cholesky_upper(a + h * da).mat();
  Mat um = cholesky_upper(a + (-h) * da).mat();
  Mat fd = (1.0 / (2 * h)) * (up - um);
  Mat du = cholesky_upper_derivative(a, da);
  CHECK(max_abs_diff(fd, du) <= 1e-7 * (du.max_abs() + 1.0));
}

TEST_CASE("cholesky derivative of a zero perturbation is exactly zero") {
  Mat a{{4.0, 2.0}, {2.0, 3.0}};
  Mat du = cholesky_upper_derivative(a, Mat(2, 2));
  CHECK(du == Mat(2, 2));
}

TEST_CASE("solve_upper handles all three sides") {
  std::mt19937_64 rng(65);
  Mat a = random_spd(rng, 4);
  auto u = cholesky_upper(a);
  Mat b = random_matrix(rng, 4, 2);

  Mat x = solve_upper(u, b, SolveSide::Left);
  CHECK(max_abs_diff(u.mat() * x, b) <= 1e-13 * b.max_abs());

  Mat xt = solve_upper(u, b, SolveSide::TransposedLeft);
  CHECK(max_abs_diff(u.mat().transposed() * xt, b) <= 1e-13 * b.max_abs());

  Mat c = random_matrix(rng, 3, 4);
  Mat xr = solve_upper(u, c, SolveSide::Right);
  CHECK(max_abs_diff(xr * u.mat(), c) <= 1e-13 * c.max_abs());
}

TEST_CASE("solve_upper against the identity returns the input bitwise") {
  Mat b{{1.5, -2.0}, {0.25, 3.0}};
  auto i2 = UpperTriangular<double>(Mat::identity(2));
  CHECK(solve_upper(i2, b, SolveSide::Left) == b);
  CHECK(solve_upper(i2, b, SolveSide::TransposedLeft) == b);
  CHECK(solve_upper(i2, b, SolveSide::Right) == b);
}

TEST_CASE("solve_upper flags numerically singular factors") {
  Mat u{{1.0, 1.0}, {0.0, 1e-18}};
  Mat b{{1.0}, {1.0}};
  CHECK_THROWS_MATCHES(
      solve_upper(UpperTriangular<double>(u), b, SolveSide::Left),
      SingularFactor, Catch::Matchers::Predicate<SingularFactor>(
                          [](const auto& e) { return e.index == 1; }));
}

TEST_CASE("strict LDU split reassembles exactly") {
  Mat m{{1.0, 2.0}, {3.0, 4.0}};
  auto p = split_strict_ldu(m);
  CHECK(p.strict_lower == Mat{{0.0, 0.0}, {3.0, 0.0}});
  CHECK(p.diagonal == Mat{{1.0, 0.0}, {0.0, 4.0}});
  CHECK(p.strict_upper == Mat{{0.0, 2.0}, {0.0, 0.0}});
  CHECK(p.strict_lower + p.diagonal + p.strict_upper == m);

  std::mt19937_64 rng(66);
  Mat r = random_matrix(rng, 5, 5);
  auto q = split_strict_ldu(r);
  CHECK(q.strict_lower + q.diagonal + q.strict_upper == r);
}

TEST_CASE("symmetric eigenvalues match the 2x2 closed form") {
  Mat a{{3.0, 1.0}, {1.0, 2.0}};
  // Closed-form oracle for the quadratic.
  const double tr = 5.0, det = 5.0;
  const double disc = std::sqrt(tr * tr - 4 * det);
  auto eig = symmetric_eigenvalues(a);
  std::sort(eig.begin(), eig.end());
  CHECK(eig[0] == Catch::Approx((tr - disc) / 2).epsilon(1e-13));
  CHECK(eig[1] == Catch::Approx((tr + disc) / 2).epsilon(1e-13));

  CHECK(condition_symmetric(a) ==
        Catch::Approx(((tr + disc) / 2) / ((tr - disc) / 2)).epsilon(1e-12));
}

TEST_CASE("singular values of a triangular factor avoid squaring loss") {
  // diag(1, 1e-12) has exactly those singular values; through A^T A the small
  // one would be at the roundoff floor.
  Mat a{{1.0, 0.0}, {0.0, 1e-12}};
  auto sv = singular_values(a);
  CHECK(sv[0] == 1.0);
  CHECK(sv[1] == 1e-12);

  std::mt19937_64 rng(67);
  Mat m = random_matrix(rng, 4, 3);
  auto s = singular_values(m);
  auto eig = symmetric_eigenvalues(m.transposed() * m);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  for (int i = 0; i < 3; ++i)
    CHECK(s[i] == Catch::Approx(std::sqrt(eig[i])).epsilon(1e-10));
}

TEST_CASE("matrix multiply validates inner dimensions") {
  Mat a(2, 3), b(2, 2);
  CHECK_THROWS_AS(a * b, DimensionError);
}

TEST_CASE("upper triangular construction rejects lower-triangle residue") {
  Mat m{{1.0, 2.0}, {0.5, 1.0}};
  CHECK_THROWS_AS(UpperTriangular<double>(m), DimensionError);
  auto t = UpperTriangular<double>::truncate(m);
  CHECK(t(1, 0) == 0.0);
  CHECK(t(0, 1) == 2.0);
}

TEST_CASE("kernels instantiate on a multiprecision scalar") {
  using W = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<50>>;
  Matrix<W> a{{4.0, 2.0}, {2.0, 3.0}};
  auto u = cholesky_upper(a);
  Matrix<W> r = u.mat().transposed() * u.mat() - a;
  CHECK(static_cast<double>(r.max_abs()) < 1e-45);

  Matrix<W> pre{{3.0, 1.0}, {4.0, 2.0}};
  Matrix<W> post = householder_triangularize(pre, 1);
  CHECK(static_cast<double>(post(0, 0) - W(5)) < 1e-45);

  Matrix<W> b{{1.0}, {2.0}};
  Matrix<W> x = solve_upper(u, b, SolveSide::Left);
  CHECK(static_cast<double>((u.mat() * x - b).max_abs()) < 1e-45);
}
