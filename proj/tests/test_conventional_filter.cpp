#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "srlg/conventional_filter.hpp"
#include "srlg/simulate.hpp"
#include "srlg/state_space.hpp"

using namespace srlg;
using Mat = Matrix<double>;

namespace {

// Identity-dynamics model with no process noise: every step halves P.
SystemMatrices<double> static_model() {
  return SystemMatrices<double>{
      Mat::identity(2), Mat(2, 1),        Mat::identity(2), Mat::identity(1),
      Mat::identity(2), Mat::identity(2), Mat(2, 1),        {},
      {},               {},               {},               {},
      {},               {}};
}

std::vector<Mat> example1_data(double tau_true, int N, std::uint64_t seed) {
  auto mdl = evaluate(example1_model<double>(), {tau_true});
  return simulate(mdl, N, seed).z;
}

}  // namespace

TEST_CASE("filter step on the static model matches hand arithmetic") {
  auto mdl = static_model();
  auto st = kf_init(mdl);
  CHECK(st.x == Mat(2, 1));
  CHECK(st.P == Mat::identity(2));

  auto out = kf_step(st, mdl, Mat(2, 1));
  // e = 0, Re = P + R = 2I, gain = P Re^-1 = I/2, P' = P - gain Re gain' = I/2.
  CHECK(out.e == Mat(2, 1));
  CHECK(out.re == 2.0 * Mat::identity(2));
  CHECK(out.cond_re == Catch::Approx(1.0).epsilon(1e-14));
  CHECK((out.gain - 0.5 * Mat::identity(2)).max_abs() <= 1e-15);
  CHECK(out.next.x == Mat(2, 1));
  CHECK((out.next.P - 0.5 * Mat::identity(2)).max_abs() <= 1e-15);
  // ln(2 pi)/2 + ln det(2I)/2 with a zero innovation.
  const double expected = 0.5 * std::log(2 * 3.141592653589793238462643) +
                          0.5 * std::log(4.0);
  CHECK(out.loglik_increment == Catch::Approx(expected).epsilon(1e-14));
}

TEST_CASE("single scalar step with unit innovation covariance") {
  // H = 0 makes Re = R = 1 regardless of the prior; with z = 0 the whole
  // criterion reduces to the constant term ln(2 pi)/4 = 0.45947.
  SystemMatrices<double> mdl{Mat::identity(1), Mat::identity(1), Mat(1, 1),
                             Mat::identity(1), Mat::identity(1),
                             Mat::identity(1), Mat(1, 1),
                             {},               {},
                             {},               {},
                             {},               {},
                             {}};
  auto res = kf_loglik(mdl, {Mat(1, 1)});
  CHECK(!res.failed);
  CHECK(res.loglik ==
        Catch::Approx(0.25 * std::log(2 * 3.141592653589793238462643))
            .epsilon(1e-15));
  CHECK(res.loglik == Catch::Approx(0.45947).margin(5e-6));
}

TEST_CASE("filter matches an explicit scalar recursion") {
  // Scalar chain written out longhand, no shared code with the filter.
  const double f = 0.9, qv = 0.5, r = 2.0, p0 = 1.5, m0 = 0.3;
  SystemMatrices<double> mdl{Mat{{f}},  Mat::identity(1), Mat::identity(1),
                             Mat{{qv}}, Mat{{r}},         Mat{{p0}},
                             Mat{{m0}}, {},               {},
                             {},        {},               {},
                             {},        {}};
  const std::vector<double> zs{0.7, -0.4, 1.9, 0.2};
  std::vector<Mat> z;
  for (double v : zs) z.push_back(Mat{{v}});

  double x = m0, P = p0, total = 0.0;
  for (double zk : zs) {
    const double e = zk - x;
    const double re = P + r;
    const double gain = f * P / re;
    total += 0.5 * (0.5 * std::log(2 * 3.141592653589793238462643) +
                    std::log(re) + e * e / re);
    x = f * x + gain * e;
    P = f * f * P + qv - gain * gain * re;
  }

  auto res = kf_loglik(mdl, z);
  REQUIRE(!res.failed);
  CHECK(res.loglik == Catch::Approx(total).epsilon(1e-14));
  CHECK(res.cond_re.size() == 4);
}

TEST_CASE("covariance stays exactly symmetric over many steps") {
  auto data = example1_data(5.0, 50, 31);
  auto mdl = evaluate(example1_model<double>(), {4.0});
  auto st = kf_init(mdl);
  for (const auto& zk : data) {
    auto out = kf_step(st, mdl, zk);
    CHECK(out.next.P == out.next.P.transposed());
    st = std::move(out.next);
  }
}

TEST_CASE("normalized innovations at the true parameter are white") {
  const double tau = 5.0;
  auto data = example1_data(tau, 1000, 42);
  auto mdl = evaluate(example1_model<double>(), {tau});

  auto st = kf_init(mdl);
  std::vector<double> ebar;
  for (const auto& zk : data) {
    auto out = kf_step(st, mdl, zk);
    ebar.push_back(out.e(0, 0) / std::sqrt(out.re(0, 0)));
    st = std::move(out.next);
  }

  double mean = 0.0;
  for (double v : ebar) mean += v;
  mean /= ebar.size();
  double var = 0.0;
  for (double v : ebar) var += (v - mean) * (v - mean);
  var /= ebar.size() - 1;

  CHECK(std::abs(mean) < 4.0 / std::sqrt(1000.0));
  CHECK(var == Catch::Approx(1.0).epsilon(0.2));
}

TEST_CASE("gradient is exactly zero when no matrix depends on theta") {
  auto mdl = static_model();
  // One parameter, all-zero derivative stacks.
  mdl.dF = {Mat(2, 2)};
  mdl.dG = {Mat(2, 1)};
  mdl.dH = {Mat(2, 2)};
  mdl.dQ = {Mat(1, 1)};
  mdl.dR = {Mat(2, 2)};
  mdl.dPi0 = {Mat(2, 2)};
  mdl.dx0 = {Mat(2, 1)};

  std::vector<Mat> z{Mat{{0.4}, {-1.2}}, Mat{{0.9}, {0.1}}};
  auto res = kf_score(mdl, z);
  REQUIRE(!res.failed);
  REQUIRE(res.gradient.size() == 1);
  CHECK(res.gradient[0] == 0.0);
}

TEST_CASE("analytic score matches central differences of the criterion") {
  auto data = example1_data(5.0, 100, 17);
  auto spec = example1_model<double>();

  for (double tau : {3.0, 7.0}) {
    auto res = kf_score(evaluate(spec, {tau}), data);
    REQUIRE(!res.failed);

    const double h = 1e-5 * tau;
    auto up = kf_loglik(evaluate(spec, {tau + h}), data);
    auto dn = kf_loglik(evaluate(spec, {tau - h}), data);
    REQUIRE(!up.failed);
    REQUIRE(!dn.failed);
    const double fd = (up.loglik - dn.loglik) / (2 * h);

    CHECK(res.gradient[0] ==
          Catch::Approx(fd).epsilon(1e-5).margin(1e-8 * std::abs(fd)));
  }
}

TEST_CASE("score changes sign across the criterion minimum") {
  auto data = example1_data(5.0, 300, 3);
  auto spec = example1_model<double>();
  auto low = kf_score(evaluate(spec, {2.0}), data);
  auto high = kf_score(evaluate(spec, {10.0}), data);
  REQUIRE(!low.failed);
  REQUIRE(!high.failed);
  // The criterion is a negative log-likelihood, so it decreases toward the
  // estimate and increases past it.
  CHECK(low.gradient[0] < 0.0);
  CHECK(high.gradient[0] > 0.0);
}

TEST_CASE("ill-conditioned innovation covariance is reported, not silently used") {
  auto spec3 = example3_model<double>(1e-2);
  auto mdl = evaluate(spec3, {2.0});
  std::vector<Mat> z{Mat{{1.0}, {1.0}}};
  auto ok = kf_loglik(mdl, z);
  REQUIRE(!ok.failed);
  // Two nearly collinear rows: condition near 4.5 / delta^2.
  CHECK(ok.cond_re[0] > 4.0e4);
  CHECK(ok.cond_re[0] < 5.0e4);

  for (double delta : {1e-8, 1e-10}) {
    auto bad = evaluate(example3_model<double>(delta), {2.0});
    auto res = kf_loglik(bad, z);
    CHECK(res.failed);
    CHECK(res.fail_step == 1);
    CHECK(!res.fail_reason.empty());
    CHECK(std::isnan(res.loglik));

    auto score = kf_score(bad, z);
    CHECK(score.failed);
    REQUIRE(score.gradient.size() == 1);
    CHECK(std::isnan(score.gradient[0]));
  }
}
