#pragma once

#include <limits>
#include <vector>

#include "kernels.hpp"
#include "matrix.hpp"
#include "results.hpp"
#include "state_space.hpp"

namespace srlg {

// Condensed square-root filter state: the upper Cholesky factor of the
// predicted covariance and the factor-scaled state b = P^{-T/2} x̂. Both are
// carried through one orthogonal triangularization per step; the covariance
// itself is never formed.
template <class S>
struct SqrtFilterState {
  UpperTriangular<S> cov_factor;  // P = cov_factor^T cov_factor
  Matrix<S> scaled_state;         // n-vector
};

template <class S>
struct EsrcfStepOutput {
  UpperTriangular<S> re_sqrt;  // m x m factor of the innovation covariance
  Matrix<S> kbar_t;            // m x n, transposed normalized gain
  Matrix<S> ebar;              // m-vector, normalized innovation Re^{-T/2} e
  Matrix<S> gamma;             // q-vector, rotated noise column
  SqrtFilterState<S> next;
  S cond_re;  // condition estimate of re_sqrt^T re_sqrt
  S loglik_increment;
};

template <class S>
SqrtFilterState<S> esrcf_init(const SystemMatrices<S>& mdl) {
  UpperTriangular<S> s = cholesky_upper(mdl.Pi0);
  Matrix<S> b = solve_upper(s, mdl.x0, SolveSide::TransposedLeft);
  return SqrtFilterState<S>{std::move(s), std::move(b)};
}

// The (m+n+q) x (m+n+1) pre-array whose first m+n columns one rotation
// triangularizes:
//   [ R^{1/2}   0        -R^{-T/2} z ]
//   [ S H^T     S F^T     b          ]
//   [ 0         Q^{1/2} G^T  0       ]
template <class S>
Matrix<S> esrcf_prearray(const SqrtFilterState<S>& st,
                         const SystemMatrices<S>& mdl, const Matrix<S>& z,
                         const UpperTriangular<S>& r_factor,
                         const UpperTriangular<S>& q_factor) {
  const int n = mdl.F.rows();
  const int m = mdl.H.rows();
  const int q = mdl.G.cols();
  const Matrix<S>& s = st.cov_factor.mat();

  Matrix<S> pre(m + n + q, m + n + 1);
  pre.set_block(0, 0, r_factor.mat());
  pre.set_block(0, m + n, -solve_upper(r_factor, z, SolveSide::TransposedLeft));
  pre.set_block(m, 0, s * mdl.H.transposed());
  pre.set_block(m, m, s * mdl.F.transposed());
  pre.set_block(m, m + n, st.scaled_state);
  pre.set_block(m + n, m, q_factor.mat() * mdl.G.transposed());
  return pre;
}

namespace detail {

// Largest 2-norm among the columns the rotation triangularizes; the
// singular-innovation threshold is relative to this scale.
template <class S>
S max_lead_column_norm(const Matrix<S>& pre, int lead_cols) {
  using std::sqrt;
  S best(0);
  for (int j = 0; j < lead_cols; ++j) {
    S s(0);
    for (int i = 0; i < pre.rows(); ++i) s += pre(i, j) * pre(i, j);
    if (s > best) best = s;
  }
  return sqrt(best);
}

template <class S>
S cond_squared_from_factor(const Matrix<S>& factor) {
  auto sv = singular_values(factor);
  if (!(sv.back() > S(0))) return std::numeric_limits<S>::infinity();
  const S ratio = sv.front() / sv.back();
  return ratio * ratio;
}

}  // namespace detail

namespace detail {

// Reads the Eq-style post-array back into filter quantities. Shared by the
// plain step and the augmented derivative step so both read identical bits.
template <class S>
EsrcfStepOutput<S> extract_step_output(const Matrix<S>& post, int m, int n,
                                       int q, const S& column_scale) {
  using std::log;
  UpperTriangular<S> re_sqrt(post.block(0, 0, m, m));
  const S floor = std::numeric_limits<S>::epsilon() * column_scale;
  for (int j = 0; j < m; ++j)
    if (re_sqrt(j, j) < floor)
      throw SingularInnovation(j, "square-root factor diagonal below scale");

  Matrix<S> ebar = -post.block(0, m + n, m, 1);
  S logdet(0);
  for (int j = 0; j < m; ++j) logdet += S(2) * log(re_sqrt(j, j));
  const S half(0.5);
  const S increment =
      half * (S(m) * half * log_two_pi<S>() + logdet + dot(ebar, ebar));
  const S cond = cond_squared_from_factor(re_sqrt.mat());

  return EsrcfStepOutput<S>{
      std::move(re_sqrt),
      post.block(0, m, m, n),
      std::move(ebar),
      post.block(m + n, m + n, q, 1),
      SqrtFilterState<S>{UpperTriangular<S>(post.block(m, m, n, n)),
                         post.block(m, m + n, n, 1)},
      cond,
      increment};
}

}  // namespace detail

template <class S>
EsrcfStepOutput<S> esrcf_step(const SqrtFilterState<S>& st,
                              const SystemMatrices<S>& mdl,
                              const Matrix<S>& z) {
  const int n = mdl.F.rows();
  const int m = mdl.H.rows();
  const int q = mdl.G.cols();

  const UpperTriangular<S> r_factor = cholesky_upper(mdl.R);
  const UpperTriangular<S> q_factor = cholesky_upper(mdl.Q);
  Matrix<S> pre = esrcf_prearray(st, mdl, z, r_factor, q_factor);
  const S scale = detail::max_lead_column_norm(pre, m + n);
  Matrix<S> post = householder_triangularize(std::move(pre), m + n);
  return detail::extract_step_output(post, m, n, q, scale);
}

template <class S>
LoglikResult<S> esrcf_loglik(const SystemMatrices<S>& mdl,
                             const std::vector<Matrix<S>>& z) {
  LoglikResult<S> res;
  S total(0);
  int step_index = 1;  // init failures count as the first step
  try {
    SqrtFilterState<S> st = esrcf_init(mdl);
    for (std::size_t k = 0; k < z.size(); ++k) {
      step_index = static_cast<int>(k) + 1;
      EsrcfStepOutput<S> step = esrcf_step(st, mdl, z[k]);
      res.cond_re.push_back(step.cond_re);
      total += step.loglik_increment;
      st = std::move(step.next);
    }
  } catch (const NumericalError& err) {
    res.failed = true;
    res.fail_step = step_index;
    res.fail_reason = err.what();
    return res;
  }
  res.loglik = total;
  return res;
}

}  // namespace srlg
