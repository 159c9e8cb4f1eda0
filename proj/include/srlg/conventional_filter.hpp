#pragma once

#include <limits>
#include <vector>

#include "kernels.hpp"
#include "matrix.hpp"
#include "results.hpp"
#include "state_space.hpp"

namespace srlg {

// One-step predicted state and covariance. P may lose definiteness on
// ill-conditioned problems; that loss is detected and reported, not repaired.
template <class S>
struct KfState {
  Matrix<S> x;  // n-vector
  Matrix<S> P;  // n x n, kept symmetric by construction
};

template <class S>
struct KfStepOutput {
  KfState<S> next;
  Matrix<S> e;   // innovation
  Matrix<S> re;  // innovation covariance, symmetrized
  UpperTriangular<S> re_factor;
  Matrix<S> gain;  // predicted-form gain F P H^T Re^-1
  S cond_re;
  S loglik_increment;
};

// Derivative of (x, P) along each parameter.
template <class S>
struct KfSensitivity {
  std::vector<Matrix<S>> dx;  // p entries, n-vectors
  std::vector<Matrix<S>> dP;  // p entries, n x n symmetric
};

template <class S>
struct KfSensStepOutput {
  KfSensitivity<S> next;
  std::vector<Matrix<S>> de;   // p entries, m-vectors
  std::vector<Matrix<S>> dre;  // p entries, m x m symmetric
  std::vector<S> gradient_increment;
};

// Relative pivot floor under which the innovation covariance counts as
// numerically singular. 64 ulps sits well clear of roundoff noise while
// admitting genuinely tiny but representable pivots.
template <class S>
S kf_pivot_floor() {
  return S(64) * std::numeric_limits<S>::epsilon();
}

template <class S>
KfState<S> kf_init(const SystemMatrices<S>& mdl) {
  return KfState<S>{mdl.x0, mdl.Pi0};
}

namespace detail {

// X = A Re^-1 with Re = U^T U, via two triangular solves.
template <class S>
Matrix<S> right_apply_inverse(const Matrix<S>& a, const UpperTriangular<S>& u) {
  Matrix<S> y = solve_upper(u, a.transposed(), SolveSide::TransposedLeft);
  return solve_upper(u, y, SolveSide::Left).transposed();
}

}  // namespace detail

template <class S>
KfStepOutput<S> kf_step(const KfState<S>& st, const SystemMatrices<S>& mdl,
                        const Matrix<S>& z) {
  using std::log;
  const int m = mdl.H.rows();

  Matrix<S> e = z - mdl.H * st.x;
  Matrix<S> pht = st.P * mdl.H.transposed();
  Matrix<S> re = (mdl.H * pht + mdl.R).symmetrized();
  const S cond = condition_symmetric(re);

  UpperTriangular<S> u(Matrix<S>(m, m));
  try {
    u = cholesky_upper(re, kf_pivot_floor<S>());
  } catch (const NotPositiveDefinite& npd) {
    throw SingularInnovation(npd.index, "covariance form pivot collapse");
  }

  Matrix<S> gain = detail::right_apply_inverse(mdl.F * pht, u);

  // Per-step term of the negative log-likelihood; ln det Re comes from the
  // factor diagonal, the quadratic form from one transposed solve.
  Matrix<S> ebar = solve_upper(u, e, SolveSide::TransposedLeft);
  S logdet(0);
  for (int j = 0; j < m; ++j) logdet += S(2) * log(u(j, j));
  const S half(0.5);
  S increment =
      half * (S(m) * half * log_two_pi<S>() + logdet + dot(ebar, ebar));

  KfState<S> next{
      mdl.F * st.x + gain * e,
      (mdl.F * st.P * mdl.F.transposed() + mdl.G * mdl.Q * mdl.G.transposed() -
       gain * re * gain.transposed())
          .symmetrized()};
  return KfStepOutput<S>{std::move(next), std::move(e),    std::move(re),
                         std::move(u),    std::move(gain), cond,
                         increment};
}

template <class S>
KfSensitivity<S> kf_sens_init(const SystemMatrices<S>& mdl) {
  return KfSensitivity<S>{mdl.dx0, mdl.dPi0};
}

// Differentiates every kf_step formula along each parameter: product rule
// through e, Re, the gain, and the state/covariance updates.
template <class S>
KfSensStepOutput<S> kf_sens_step(const KfState<S>& st,
                                 const KfSensitivity<S>& sens,
                                 const KfStepOutput<S>& step,
                                 const SystemMatrices<S>& mdl) {
  const int p = static_cast<int>(sens.dx.size());
  const S half(0.5);
  KfSensStepOutput<S> out;
  out.next.dx.reserve(p);
  out.next.dP.reserve(p);
  out.de.reserve(p);
  out.dre.reserve(p);
  out.gradient_increment.reserve(p);

  const Matrix<S> ht = mdl.H.transposed();
  const Matrix<S> pht = st.P * ht;
  const Matrix<S> u_inv_e = solve_upper(step.re_factor, step.e,
                                        SolveSide::TransposedLeft);
  // re_inv_e = Re^-1 e, reused by the quadratic-form derivative.
  const Matrix<S> re_inv_e = solve_upper(step.re_factor, u_inv_e,
                                         SolveSide::Left);

  for (int i = 0; i < p; ++i) {
    const Matrix<S>& dF = mdl.dF[i];
    const Matrix<S>& dG = mdl.dG[i];
    const Matrix<S>& dH = mdl.dH[i];
    const Matrix<S>& dQ = mdl.dQ[i];
    const Matrix<S>& dR = mdl.dR[i];
    const Matrix<S>& dx = sens.dx[i];
    const Matrix<S>& dP = sens.dP[i];

    Matrix<S> de = -(dH * st.x) - mdl.H * dx;
    Matrix<S> dpht = dP * ht + st.P * dH.transposed();
    Matrix<S> dre = (dH * pht + mdl.H * dpht + dR).symmetrized();

    Matrix<S> dgain_num = dF * pht + mdl.F * dpht - step.gain * dre;
    Matrix<S> dgain = detail::right_apply_inverse(dgain_num, step.re_factor);

    Matrix<S> dx_next = dF * st.x + mdl.F * dx + dgain * step.e +
                        step.gain * de;
    Matrix<S> dP_next =
        (dF * st.P * mdl.F.transposed() + mdl.F * dP * mdl.F.transposed() +
         mdl.F * st.P * dF.transposed() + dG * mdl.Q * mdl.G.transposed() +
         mdl.G * dQ * mdl.G.transposed() + mdl.G * mdl.Q * dG.transposed() -
         dgain * step.re * step.gain.transposed() -
         step.gain * dre * step.gain.transposed() -
         step.gain * step.re * dgain.transposed())
            .symmetrized();

    // d/dtheta of the per-step log-likelihood term:
    //   1/2 tr(Re^-1 dRe) + e^T Re^-1 de - 1/2 (Re^-1 e)^T dRe (Re^-1 e)
    Matrix<S> re_inv_dre = solve_upper(
        step.re_factor,
        solve_upper(step.re_factor, dre, SolveSide::TransposedLeft),
        SolveSide::Left);
    S trace(0);
    for (int j = 0; j < re_inv_dre.rows(); ++j) trace += re_inv_dre(j, j);
    S g = half * trace + dot(re_inv_e, de) -
          half * dot(re_inv_e, dre * re_inv_e);

    out.de.push_back(std::move(de));
    out.dre.push_back(std::move(dre));
    out.next.dx.push_back(std::move(dx_next));
    out.next.dP.push_back(std::move(dP_next));
    out.gradient_increment.push_back(g);
  }
  return out;
}

template <class S>
LoglikResult<S> kf_loglik(const SystemMatrices<S>& mdl,
                          const std::vector<Matrix<S>>& z) {
  LoglikResult<S> res;
  KfState<S> st = kf_init(mdl);
  S total(0);
  for (std::size_t k = 0; k < z.size(); ++k) {
    try {
      KfStepOutput<S> step = kf_step(st, mdl, z[k]);
      res.cond_re.push_back(step.cond_re);
      total += step.loglik_increment;
      st = std::move(step.next);
    } catch (const NumericalError& err) {
      res.failed = true;
      res.fail_step = static_cast<int>(k) + 1;
      res.fail_reason = err.what();
      return res;
    }
  }
  res.loglik = total;
  return res;
}

template <class S>
ScoreResult<S> kf_score(const SystemMatrices<S>& mdl,
                        const std::vector<Matrix<S>>& z) {
  const int p = static_cast<int>(mdl.dF.size());
  ScoreResult<S> res;
  res.gradient.assign(p, std::numeric_limits<S>::quiet_NaN());

  KfState<S> st = kf_init(mdl);
  KfSensitivity<S> sens = kf_sens_init(mdl);
  S total(0);
  std::vector<S> grad(p, S(0));
  for (std::size_t k = 0; k < z.size(); ++k) {
    try {
      KfStepOutput<S> step = kf_step(st, mdl, z[k]);
      KfSensStepOutput<S> dstep = kf_sens_step(st, sens, step, mdl);
      res.cond_re.push_back(step.cond_re);
      total += step.loglik_increment;
      for (int i = 0; i < p; ++i) grad[i] += dstep.gradient_increment[i];
      st = std::move(step.next);
      sens = std::move(dstep.next);
    } catch (const NumericalError& err) {
      res.failed = true;
      res.fail_step = static_cast<int>(k) + 1;
      res.fail_reason = err.what();
      return res;
    }
  }
  res.loglik = total;
  res.gradient = std::move(grad);
  return res;
}

}  // namespace srlg
