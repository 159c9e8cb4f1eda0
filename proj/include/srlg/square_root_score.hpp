#pragma once

#include <limits>
#include <vector>

#include "kernels.hpp"
#include "matrix.hpp"
#include "results.hpp"
#include "square_root_filter.hpp"
#include "state_space.hpp"

namespace srlg {

// Parameter derivatives of the square-root filter state: dS with an exactly
// zero strictly-lower part, and db, one entry per parameter.
template <class S>
struct DerivativeState {
  std::vector<Matrix<S>> dS;
  std::vector<Matrix<S>> db;
};

// One parameter's slice of the rotated derivative columns, partitioned like
// the lead post-array: rows split (m, n, q), columns split (m, n, 1).
template <class S>
struct DerivativeBlocks {
  Matrix<S> top_meas, top_state, top_vec;
  Matrix<S> mid_meas, mid_state, mid_vec;
  Matrix<S> bot_meas, bot_state, bot_vec;
};

template <class S>
struct AugmentedStepOutput {
  EsrcfStepOutput<S> lead;
  std::vector<DerivativeBlocks<S>> deriv;
};

template <class S>
struct FactorDerivatives {
  Matrix<S> dre_sqrt;  // m x m, exact-zero lower part
  Matrix<S> dkbar_t;   // m x n
  Matrix<S> ds_next;   // n x n, exact-zero lower part
};

template <class S>
struct StateDerivatives {
  Matrix<S> debar;    // m-vector
  Matrix<S> db_next;  // n-vector
};

// Differentiates the filter initialization: S = chol(Pi0) gives
// dS through the factorization's derivative recurrence, and S^T b = x0
// gives S^T db = dx0 - dS^T b.
template <class S>
DerivativeState<S> init_derivatives(const SystemMatrices<S>& mdl,
                                    const SqrtFilterState<S>& init) {
  const int p = static_cast<int>(mdl.dPi0.size());
  DerivativeState<S> d;
  d.dS.reserve(p);
  d.db.reserve(p);
  for (int i = 0; i < p; ++i) {
    Matrix<S> ds = cholesky_upper_derivative(mdl.Pi0, mdl.dPi0[i]);
    Matrix<S> rhs = mdl.dx0[i] - ds.transposed() * init.scaled_state;
    d.db.push_back(
        solve_upper(init.cov_factor, rhs, SolveSide::TransposedLeft));
    d.dS.push_back(std::move(ds));
  }
  return d;
}

// Widens the filter pre-array with one (m+n+1)-column derivative group per
// parameter so a single rotation transforms state and derivatives together:
//   [ dR^{1/2}         0                d(-R^{-T/2} z)  ]
//   [ dS H^T + S dH^T  dS F^T + S dF^T  db              ]
//   [ 0                d(Q^{1/2} G^T)   0               ]
template <class S>
Matrix<S> build_augmented_prearray(const SqrtFilterState<S>& st,
                                   const DerivativeState<S>& deriv,
                                   const SystemMatrices<S>& mdl,
                                   const Matrix<S>& z) {
  const int n = mdl.F.rows();
  const int m = mdl.H.rows();
  const int q = mdl.G.cols();
  const int p = static_cast<int>(deriv.dS.size());
  const int group = m + n + 1;

  const UpperTriangular<S> r_factor = cholesky_upper(mdl.R);
  const UpperTriangular<S> q_factor = cholesky_upper(mdl.Q);
  const Matrix<S> y = solve_upper(r_factor, z, SolveSide::TransposedLeft);
  const Matrix<S>& s = st.cov_factor.mat();

  Matrix<S> wide(m + n + q, group * (1 + p));
  wide.set_block(0, 0, esrcf_prearray(st, mdl, z, r_factor, q_factor));

  for (int i = 0; i < p; ++i) {
    const int o = group * (i + 1);
    Matrix<S> dr_factor = cholesky_upper_derivative(mdl.R, mdl.dR[i]);
    Matrix<S> dq_factor = cholesky_upper_derivative(mdl.Q, mdl.dQ[i]);

    wide.set_block(0, o, dr_factor);
    // d(-R^{-T/2} z) = +R^{-T/2} dR^{T/2} R^{-T/2} z with z held constant.
    wide.set_block(0, o + m + n,
                   solve_upper(r_factor, dr_factor.transposed() * y,
                               SolveSide::TransposedLeft));
    wide.set_block(m, o,
                   deriv.dS[i] * mdl.H.transposed() +
                       s * mdl.dH[i].transposed());
    wide.set_block(m, o + m,
                   deriv.dS[i] * mdl.F.transposed() +
                       s * mdl.dF[i].transposed());
    wide.set_block(m, o + m + n, deriv.db[i]);
    wide.set_block(m + n, o + m,
                   dq_factor * mdl.G.transposed() +
                       q_factor.mat() * mdl.dG[i].transposed());
  }
  return wide;
}

// Rotates the augmented array (one Householder sequence for everything,
// sign normalization included) and slices it into lead and derivative blocks.
template <class S>
AugmentedStepOutput<S> triangularize_augmented(Matrix<S> pre, int m, int n,
                                               int q) {
  const int group = m + n + 1;
  if (pre.rows() != m + n + q || pre.cols() % group != 0)
    throw DimensionError("triangularize_augmented: malformed array");
  const int p = pre.cols() / group - 1;

  const S scale = detail::max_lead_column_norm(pre, m + n);
  Matrix<S> post = householder_triangularize(std::move(pre), m + n);

  AugmentedStepOutput<S> out{
      detail::extract_step_output(post, m, n, q, scale), {}};
  out.deriv.reserve(p);
  for (int i = 0; i < p; ++i) {
    const int o = group * (i + 1);
    out.deriv.push_back(DerivativeBlocks<S>{
        post.block(0, o, m, m), post.block(0, o + m, m, n),
        post.block(0, o + m + n, m, 1), post.block(m, o, n, m),
        post.block(m, o + m, n, n), post.block(m, o + m + n, n, 1),
        post.block(m + n, o, q, m), post.block(m + n, o + m, q, n),
        post.block(m + n, o + m + n, q, 1)});
  }
  return out;
}

// Strict LDU split of  [[top_meas, top_state], [mid_meas, mid_state]] times
// the inverse of the triangular lead block [[Re^{1/2}, Kbar^T], [0, S']],
// realized as two right solves.
template <class S>
LduParts<S> ldu_of_product(const EsrcfStepOutput<S>& lead,
                           const DerivativeBlocks<S>& g) {
  const int m = lead.re_sqrt.dim();
  const int n = lead.next.cov_factor.dim();

  Matrix<S> left(m + n, m);
  left.set_block(0, 0, g.top_meas);
  left.set_block(m, 0, g.mid_meas);
  Matrix<S> right(m + n, n);
  right.set_block(0, 0, g.top_state);
  right.set_block(m, 0, g.mid_state);

  Matrix<S> z1 = solve_upper(lead.re_sqrt, left, SolveSide::Right);
  Matrix<S> z2 = solve_upper(lead.next.cov_factor, right - z1 * lead.kbar_t,
                             SolveSide::Right);
  Matrix<S> z(m + n, m + n);
  z.set_block(0, 0, z1);
  z.set_block(0, m, z2);
  return split_strict_ldu(z);
}

namespace detail {

template <class S>
Matrix<S> assemble_lead_block(const EsrcfStepOutput<S>& lead) {
  const int m = lead.re_sqrt.dim();
  const int n = lead.next.cov_factor.dim();
  Matrix<S> block(m + n, m + n);
  block.set_block(0, 0, lead.re_sqrt.mat());
  block.set_block(0, m, lead.kbar_t);
  block.set_block(m, m, lead.next.cov_factor.mat());
  return block;
}

}  // namespace detail

// Factor-derivative update: (Lbar^T + D + Ubar) times the lead block gives
// [[dRe^{1/2}, dKbar^T], [0, dS']]. The (2,1) block must vanish by the
// skew-symmetry cancellation; it is asserted small, then zeroed.
template <class S>
FactorDerivatives<S> update_factor_derivatives(const EsrcfStepOutput<S>& lead,
                                               const LduParts<S>& split) {
  const int m = lead.re_sqrt.dim();
  const int n = lead.next.cov_factor.dim();

  Matrix<S> coeff = split.strict_lower.transposed() + split.diagonal +
                    split.strict_upper;
  Matrix<S> full = coeff * detail::assemble_lead_block(lead);

  using std::abs;
  const S tol = S(1e-10) * full.max_abs();
  for (int i = m; i < m + n; ++i)
    for (int j = 0; j < m; ++j) {
      if (abs(full(i, j)) > tol)
        throw NumericalError(
            "factor-derivative update lost triangularity", i);
      full(i, j) = S(0);
    }

  return FactorDerivatives<S>{full.block(0, 0, m, m), full.block(0, m, m, n),
                              full.block(m, m, n, n)};
}

// State-derivative update on the stacked vector [-ebar; b']:
//   (Lbar^T - Lbar) [-ebar; b']
//   + blockInverse^T [bot_meas; bot_state]^T gamma
//   + [top_vec; mid_vec]
// The middle term solves against the transposed lead block, which is lower
// block triangular, so it goes forward through the two factors.
template <class S>
StateDerivatives<S> update_state_derivatives(const EsrcfStepOutput<S>& lead,
                                             const DerivativeBlocks<S>& g,
                                             const LduParts<S>& split) {
  const int m = lead.re_sqrt.dim();
  const int n = lead.next.cov_factor.dim();

  Matrix<S> u(m + n, 1);
  u.set_block(0, 0, -lead.ebar);
  u.set_block(m, 0, lead.next.scaled_state);
  Matrix<S> rhs =
      (split.strict_lower.transposed() - split.strict_lower) * u;

  Matrix<S> v1 = solve_upper(lead.re_sqrt, g.bot_meas.transposed() * lead.gamma,
                             SolveSide::TransposedLeft);
  Matrix<S> v2 = solve_upper(lead.next.cov_factor,
                             g.bot_state.transposed() * lead.gamma -
                                 lead.kbar_t.transposed() * v1,
                             SolveSide::TransposedLeft);
  for (int j = 0; j < m; ++j)
    rhs(j, 0) += v1(j, 0) + g.top_vec(j, 0);
  for (int j = 0; j < n; ++j)
    rhs(m + j, 0) += v2(j, 0) + g.mid_vec(j, 0);

  return StateDerivatives<S>{-rhs.block(0, 0, m, 1), rhs.block(m, 0, n, 1)};
}

// Per-parameter gradient term: the factor diagonal carries the log-det
// derivative, the normalized innovation carries the quadratic-form part.
template <class S>
S score_increment(const EsrcfStepOutput<S>& lead, const Matrix<S>& dre_sqrt,
                  const Matrix<S>& debar) {
  S g(0);
  for (int j = 0; j < lead.re_sqrt.dim(); ++j)
    g += dre_sqrt(j, j) / lead.re_sqrt(j, j);
  return g + dot(lead.ebar, debar);
}

// Full pass: log-likelihood and its parameter gradient in one sweep of
// augmented rotations, all derivative quantities staying in factored form.
template <class S>
ScoreResult<S> sqrt_score(const SystemMatrices<S>& mdl,
                          const std::vector<Matrix<S>>& z) {
  const int n = mdl.F.rows();
  const int m = mdl.H.rows();
  const int q = mdl.G.cols();
  const int p = static_cast<int>(mdl.dF.size());

  ScoreResult<S> res;
  res.gradient.assign(p, std::numeric_limits<S>::quiet_NaN());
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
      res.cond_re.push_back(out.lead.cond_re);
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
    }
  } catch (const NumericalError& err) {
    res.failed = true;
    res.fail_step = step_index;
    res.fail_reason = err.what();
    return res;
  }
  res.loglik = total;
  res.gradient = std::move(grad);
  return res;
}

}  // namespace srlg
