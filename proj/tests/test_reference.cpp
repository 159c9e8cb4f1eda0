#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "srlg/reference.hpp"
#include "srlg/simulate.hpp"
#include "srlg/square_root_filter.hpp"
#include "srlg/state_space.hpp"

using namespace srlg;
using Mat = Matrix<double>;

namespace {

std::vector<Matrix<OracleReal>> widen_all(const std::vector<Mat>& z) {
  std::vector<Matrix<OracleReal>> w;
  for (const auto& zk : z) w.push_back(detail::widen<OracleReal>(zk));
  return w;
}

SystemMatrices<double> frozen_model() {
  return SystemMatrices<double>{
      Mat::identity(2), Mat(2, 1),        Mat::identity(2), Mat::identity(1),
      Mat::identity(2), Mat::identity(2), Mat(2, 1),        {Mat(2, 2)},
      {Mat(2, 1)},      {Mat(2, 2)},      {Mat(1, 1)},      {Mat(2, 2)},
      {Mat(2, 2)},      {Mat(2, 1)}};
}

}  // namespace

TEST_CASE("finite differences recover simple derivatives") {
  auto constant = [](const std::vector<double>&) { return 7.25; };
  auto g0 = finite_difference_gradient(constant, {5.0}, 1e-5);
  CHECK(g0[0] == 0.0);

  auto quadratic = [](const std::vector<double>& t) {
    return 0.5 * (t[0] - 3.0) * (t[0] - 3.0);
  };
  auto g1 = finite_difference_gradient(quadratic, {5.0}, 1e-6);
  CHECK(g1[0] == Catch::Approx(2.0).epsilon(1e-9));

  auto bad = [](const std::vector<double>& t) {
    return t[0] > 5.0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  };
  CHECK_THROWS_AS(finite_difference_gradient(bad, {5.0}, 1e-6),
                  NumericalError);
}

TEST_CASE("capture passes reproduce the plain drivers bitwise") {
  auto data = simulate(evaluate(example1_model<double>(), {5.0}), 30, 8).z;
  auto mdl = evaluate(example1_model<double>(), {4.0});

  auto kf_cap = kf_run_capture<double>(mdl, data);
  REQUIRE(!kf_cap.failed);
  CHECK(kf_cap.loglik == kf_loglik(mdl, data).loglik);
  CHECK(kf_cap.gradient[0] == kf_score(mdl, data).gradient[0]);

  auto sq_cap = sqrt_run_capture<double>(mdl, data);
  REQUIRE(!sq_cap.failed);
  CHECK(sq_cap.loglik == esrcf_loglik(mdl, data).loglik);
  CHECK(sq_cap.gradient[0] == sqrt_score(mdl, data).gradient[0]);

  // Both captures see the same first-step covariance, up to factored roundoff.
  CHECK((kf_cap.P1 - sq_cap.P1).max_abs() <= 1e-12);
  CHECK((kf_cap.dP1[0] - sq_cap.dP1[0]).max_abs() <= 1e-12);
}

TEST_CASE("reference gradient of a frozen model is exactly zero") {
  auto mdl = frozen_model();
  std::vector<Mat> z{Mat{{0.4}, {-1.2}}, Mat{{0.9}, {0.1}}};
  SystemMatrices<OracleReal> wide{
      detail::widen<OracleReal>(mdl.F),   detail::widen<OracleReal>(mdl.G),
      detail::widen<OracleReal>(mdl.H),   detail::widen<OracleReal>(mdl.Q),
      detail::widen<OracleReal>(mdl.R),   detail::widen<OracleReal>(mdl.Pi0),
      detail::widen<OracleReal>(mdl.x0),  {detail::widen<OracleReal>(mdl.dF[0])},
      {detail::widen<OracleReal>(mdl.dG[0])},
      {detail::widen<OracleReal>(mdl.dH[0])},
      {detail::widen<OracleReal>(mdl.dQ[0])},
      {detail::widen<OracleReal>(mdl.dR[0])},
      {detail::widen<OracleReal>(mdl.dPi0[0])},
      {detail::widen<OracleReal>(mdl.dx0[0])}};
  auto cap = kf_run_capture<OracleReal>(wide, widen_all(z));
  REQUIRE(!cap.failed);
  CHECK(cap.gradient[0] == OracleReal(0));
}

TEST_CASE("double precision agrees with the reference on an easy problem") {
  auto data = simulate(evaluate(example1_model<double>(), {5.0}), 20, 12).z;
  auto mdl = evaluate(example1_model<double>(), {3.0});
  auto wide = evaluate(example1_model<OracleReal>(), {OracleReal(3)});

  auto oracle = kf_run_capture<OracleReal>(wide, widen_all(data));
  REQUIRE(!oracle.failed);
  const double ref = static_cast<double>(oracle.loglik);
  CHECK(kf_loglik(mdl, data).loglik == Catch::Approx(ref).epsilon(1e-12));
  CHECK(esrcf_loglik(mdl, data).loglik == Catch::Approx(ref).epsilon(1e-12));
}

TEST_CASE("reference self-comparison sits at working-precision rounding") {
  auto mdl = evaluate(example3_model<OracleReal>(1e-2), {OracleReal(2)});
  std::vector<Matrix<OracleReal>> z{
      detail::widen<OracleReal>(Mat{{1.0}, {1.0}})};
  auto oracle = kf_run_capture<OracleReal>(mdl, z);
  REQUIRE(!oracle.failed);

  auto err = compare_to_oracle(downcast_capture(oracle), oracle);
  CHECK(!err.failed);
  CHECK(err.dP1 <= 1e-13);
  CHECK(err.dP1_prime <= 1e-13);
  CHECK(err.dLogLF <= 1e-13);
  CHECK(err.dLogLG <= 1e-13);
}

TEST_CASE("doubling the reference precision does not move the references") {
  const double delta = 1e-6;
  std::vector<Mat> z{Mat{{1.0}, {1.0}}};

  auto real_cap = kf_run_capture<OracleReal>(
      evaluate(example3_model<OracleReal>(delta), {OracleReal(2)}),
      widen_all(z));
  std::vector<Matrix<OracleWide>> zw;
  for (const auto& zk : z) {
    Matrix<OracleWide> w(zk.rows(), zk.cols());
    for (int i = 0; i < zk.rows(); ++i)
      for (int j = 0; j < zk.cols(); ++j) w(i, j) = OracleWide(zk(i, j));
    zw.push_back(std::move(w));
  }
  auto wide_cap = kf_run_capture<OracleWide>(
      evaluate(example3_model<OracleWide>(delta), {OracleWide(2)}), zw);
  REQUIRE(!real_cap.failed);
  REQUIRE(!wide_cap.failed);

  using std::abs;
  OracleWide rel =
      abs(OracleWide(real_cap.loglik) - wide_cap.loglik) / abs(wide_cap.loglik);
  CHECK(rel < OracleWide(1e-20));
  rel = abs(OracleWide(real_cap.gradient[0]) - wide_cap.gradient[0]) /
        abs(wide_cap.gradient[0]);
  CHECK(rel < OracleWide(1e-20));

  OracleWide worst(0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      worst = std::max(worst, abs(OracleWide(real_cap.P1(i, j)) -
                                  wide_cap.P1(i, j)));
  CHECK(worst / wide_cap.P1.max_abs() < OracleWide(1e-20));
}

TEST_CASE("error report ranks the methods as conditioning tightens") {
  std::vector<Mat> z{Mat{{1.0}, {1.0}}};
  auto report_at = [&](double delta) {
    return error_report(
        evaluate(example3_model<double>(delta), {2.0}),
        evaluate(example3_model<OracleReal>(delta), {OracleReal(2)}), z);
  };

  auto easy = report_at(1e-2);
  REQUIRE(!easy.conventional.failed);
  REQUIRE(!easy.square_root.failed);

  auto mid = report_at(1e-4);
  auto hard = report_at(1e-6);
  REQUIRE(!mid.conventional.failed);
  REQUIRE(!hard.conventional.failed);

  // The covariance-form errors grow with the squared condition number; the
  // factored form tracks the condition number itself.
  CHECK(mid.conventional.dP1_prime <= hard.conventional.dP1_prime);
  CHECK(hard.square_root.dP1 < hard.conventional.dP1);
  CHECK(hard.square_root.dP1_prime < hard.conventional.dP1_prime);

  auto broken = report_at(1e-9);
  CHECK(broken.conventional.failed);
  REQUIRE(!broken.square_root.failed);
  CHECK(broken.square_root.dP1 <= 1e-5);
  CHECK(std::isnan(broken.conventional.dP1));
}
