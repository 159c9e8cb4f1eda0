#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "conventional_filter.hpp"
#include "matrix.hpp"
#include "results.hpp"
#include "square_root_score.hpp"
#include "state_space.hpp"

namespace srlg {

// Reference scalar: 100 decimal digits, enough that even the worst-conditioned
// sweep rows keep reference values exact far beyond double. The wide variant
// exists only to demonstrate that doubling the precision does not move the
// references (the escalation check).
using OracleReal = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<100>, boost::multiprecision::et_off>;
using OracleWide = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<200>, boost::multiprecision::et_off>;

// Everything an accuracy comparison needs from one filter pass: the
// covariance after the first step, its parameter derivatives, and the
// full-horizon log-likelihood and gradient.
template <class S>
struct FilterCapture {
  Matrix<S> P1;
  std::vector<Matrix<S>> dP1;
  S loglik = std::numeric_limits<S>::quiet_NaN();
  std::vector<S> gradient;
  bool failed = false;
  int fail_step = 0;
  std::string fail_reason;
};

// Conventional filter plus sensitivity recursions, capturing first-step
// quantities. Instantiated at double for the method under test and at
// OracleReal/OracleWide for the reference.
template <class S>
FilterCapture<S> kf_run_capture(const SystemMatrices<S>& mdl,
                                const std::vector<Matrix<S>>& z) {
  const int p = static_cast<int>(mdl.dF.size());
  FilterCapture<S> cap;
  KfState<S> st = kf_init(mdl);
  KfSensitivity<S> sens = kf_sens_init(mdl);
  S total(0);
  std::vector<S> grad(p, S(0));
  for (std::size_t k = 0; k < z.size(); ++k) {
    try {
      KfStepOutput<S> step = kf_step(st, mdl, z[k]);
      KfSensStepOutput<S> dstep = kf_sens_step(st, sens, step, mdl);
      total += step.loglik_increment;
      for (int i = 0; i < p; ++i) grad[i] += dstep.gradient_increment[i];
      st = std::move(step.next);
      sens = std::move(dstep.next);
      if (k == 0) {
        cap.P1 = st.P;
        cap.dP1 = sens.dP;
      }
    } catch (const NumericalError& err) {
      cap.failed = true;
      cap.fail_step = static_cast<int>(k) + 1;
      cap.fail_reason = err.what();
      return cap;
    }
  }
  cap.loglik = total;
  cap.gradient = std::move(grad);
  return cap;
}

// Square-root pass with the same capture, reconstructing P = S^T S and
// dP = dS^T S + S^T dS from the factors so both methods are compared in the
// same coordinates.
template <class S>
FilterCapture<S> sqrt_run_capture(const SystemMatrices<S>& mdl,
                                  const std::vector<Matrix<S>>& z) {
  const int n = mdl.F.rows();
  const int m = mdl.H.rows();
  const int q = mdl.G.cols();
  const int p = static_cast<int>(mdl.dF.size());
  FilterCapture<S> cap;
  S total(0);
  std::vector<S> grad(p, S(0));
  int step_index = 1;
  try {
    SqrtFilterState<S> st = esrcf_init(mdl);
    DerivativeState<S> deriv = init_derivatives(mdl, st);
    for (std::size_t k = 0; k < z.size(); ++k) {
      step_index = static_cast<int>(k) + 1;
      AugmentedStepOutput<S> out = triangularize_augmented(
          build_augmented_prearray(st, deriv, mdl, z[k]), m, n, q);
      total += out.lead.loglik_increment;
      for (int i = 0; i < p; ++i) {
        LduParts<S> split = ldu_of_product(out.lead, out.deriv[i]);
        FactorDerivatives<S> fd = update_factor_derivatives(out.lead, split);
        StateDerivatives<S> sd =
            update_state_derivatives(out.lead, out.deriv[i], split);
        grad[i] += score_increment(out.lead, fd.dre_sqrt, sd.debar);
        deriv.dS[i] = std::move(fd.ds_next);
        deriv.db[i] = std::move(sd.db_next);
      }
      st = std::move(out.lead.next);
      if (k == 0) {
        const Matrix<S>& s = st.cov_factor.mat();
        cap.P1 = s.transposed() * s;
        cap.dP1.reserve(p);
        for (int i = 0; i < p; ++i)
          cap.dP1.push_back(deriv.dS[i].transposed() * s +
                            s.transposed() * deriv.dS[i]);
      }
    }
  } catch (const NumericalError& err) {
    cap.failed = true;
    cap.fail_step = step_index;
    cap.fail_reason = err.what();
    return cap;
  }
  cap.loglik = total;
  cap.gradient = std::move(grad);
  return cap;
}

// Central differences with a per-coordinate step relative to the parameter
// magnitude. loglik_fn must return a finite value at theta +/- eps.
template <class F>
std::vector<double> finite_difference_gradient(F&& loglik_fn,
                                               const std::vector<double>& theta,
                                               double rel_step) {
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double eps = rel_step * std::max(std::abs(theta[i]), 1.0);
    std::vector<double> tp = theta, tm = theta;
    tp[i] += eps;
    tm[i] -= eps;
    const double fp = loglik_fn(tp);
    const double fm = loglik_fn(tm);
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericalError("finite differences: non-finite value at coordinate " +
                               std::to_string(i),
                           static_cast<int>(i));
    g[i] = (fp - fm) / (2 * eps);
  }
  return g;
}

namespace detail {

template <class S>
Matrix<S> widen(const Matrix<double>& a) {
  Matrix<S> w(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) w(i, j) = S(a(i, j));
  return w;
}

// Max-abs entrywise difference, accumulated at the oracle's precision.
template <class S>
double max_abs_error(const Matrix<double>& approx, const Matrix<S>& exact) {
  return static_cast<double>((widen<S>(approx) - exact).max_abs());
}

}  // namespace detail

// Max-absolute errors of one working-precision pass against the oracle pass,
// matching the accuracy-table columns. A failed method reports failed=true
// and NaN entries.
struct MethodErrors {
  double dP1 = std::numeric_limits<double>::quiet_NaN();
  double dP1_prime = std::numeric_limits<double>::quiet_NaN();
  double dLogLF = std::numeric_limits<double>::quiet_NaN();
  double dLogLG = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string fail_reason;
};

template <class S>
MethodErrors compare_to_oracle(const FilterCapture<double>& method,
                               const FilterCapture<S>& oracle) {
  MethodErrors err;
  if (method.failed) {
    err.failed = true;
    err.fail_reason = method.fail_reason;
    return err;
  }
  using std::abs;
  err.dP1 = detail::max_abs_error(method.P1, oracle.P1);
  err.dP1_prime = 0;
  for (std::size_t i = 0; i < oracle.dP1.size(); ++i)
    err.dP1_prime = std::max(
        err.dP1_prime, detail::max_abs_error(method.dP1[i], oracle.dP1[i]));
  err.dLogLF = static_cast<double>(abs(S(method.loglik) - oracle.loglik));
  err.dLogLG = 0;
  for (std::size_t i = 0; i < oracle.gradient.size(); ++i)
    err.dLogLG = std::max(
        err.dLogLG,
        static_cast<double>(abs(S(method.gradient[i]) - oracle.gradient[i])));
  return err;
}

// Rounds an oracle capture to working precision, for self-comparison checks.
template <class S>
FilterCapture<double> downcast_capture(const FilterCapture<S>& cap) {
  FilterCapture<double> d;
  d.failed = cap.failed;
  d.fail_step = cap.fail_step;
  d.fail_reason = cap.fail_reason;
  if (cap.failed) return d;
  d.P1 = Matrix<double>(cap.P1.rows(), cap.P1.cols());
  for (int i = 0; i < cap.P1.rows(); ++i)
    for (int j = 0; j < cap.P1.cols(); ++j)
      d.P1(i, j) = static_cast<double>(cap.P1(i, j));
  for (const auto& m : cap.dP1) {
    Matrix<double> dm(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) dm(i, j) = static_cast<double>(m(i, j));
    d.dP1.push_back(std::move(dm));
  }
  d.loglik = static_cast<double>(cap.loglik);
  for (const auto& g : cap.gradient) d.gradient.push_back(static_cast<double>(g));
  return d;
}

struct ErrorReport {
  MethodErrors conventional;
  MethodErrors square_root;
};

// Runs the oracle and both working-precision methods on the same data and
// returns their error reports. The data is widened exactly, so every
// precision solves the identical problem instance.
inline ErrorReport error_report(const SystemMatrices<double>& model_double,
                                const SystemMatrices<OracleReal>& model_oracle,
                                const std::vector<Matrix<double>>& z) {
  std::vector<Matrix<OracleReal>> z_wide;
  z_wide.reserve(z.size());
  for (const auto& zk : z) z_wide.push_back(detail::widen<OracleReal>(zk));

  FilterCapture<OracleReal> oracle =
      kf_run_capture<OracleReal>(model_oracle, z_wide);
  if (oracle.failed)
    throw NumericalError("oracle failed: " + oracle.fail_reason,
                         oracle.fail_step);

  ErrorReport rep;
  rep.conventional =
      compare_to_oracle(kf_run_capture<double>(model_double, z), oracle);
  rep.square_root =
      compare_to_oracle(sqrt_run_capture<double>(model_double, z), oracle);
  return rep;
}

}  // namespace srlg
