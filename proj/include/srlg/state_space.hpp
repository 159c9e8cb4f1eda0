#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace srlg {

struct Dimensions {
  int n = 0;  // state
  int m = 0;  // measurement
  int q = 0;  // process noise
  int p = 0;  // parameters
};

// One model instance: system matrices at a fixed parameter vector, together
// with the analytic derivative of every matrix along each parameter.
template <class S>
struct SystemMatrices {
  Matrix<S> F, G, H, Q, R, Pi0, x0;
  std::vector<Matrix<S>> dF, dG, dH, dQ, dR, dPi0, dx0;
};

template <class S>
struct ModelSpec {
  std::string name;
  Dimensions dims;
  std::function<bool(const std::vector<S>&)> theta_in_domain;
  std::function<SystemMatrices<S>(const std::vector<S>&)> build;
};

namespace detail {

template <class S>
void check_shape(const Matrix<S>& a, int r, int c, const std::string& what) {
  if (a.rows() != r || a.cols() != c)
    throw DimensionError(what + ": expected " + std::to_string(r) + "x" +
                         std::to_string(c) + ", got " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
}

template <class S>
void check_symmetric(const Matrix<S>& a, const std::string& what) {
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j)
      if (!(a(i, j) == a(j, i)))
        throw DimensionError(what + ": not symmetric");
}

template <class S>
void check_stack(const std::vector<Matrix<S>>& dm, int p, int r, int c,
                 const std::string& what, bool symmetric = false) {
  if (static_cast<int>(dm.size()) != p)
    throw DimensionError(what + ": expected one matrix per parameter");
  for (int i = 0; i < p; ++i) {
    check_shape(dm[i], r, c, what);
    if (symmetric) check_symmetric(dm[i], what);
  }
}

}  // namespace detail

// Evaluates the model at theta and validates every shape and symmetry
// contract, so the filters downstream can assume well-formed input.
template <class S>
SystemMatrices<S> evaluate(const ModelSpec<S>& spec,
                           const std::vector<S>& theta) {
  const Dimensions& d = spec.dims;
  if (static_cast<int>(theta.size()) != d.p)
    throw DimensionError(spec.name + ": theta has " +
                         std::to_string(theta.size()) + " entries, model has " +
                         std::to_string(d.p) + " parameters");
  if (!spec.theta_in_domain(theta))
    throw ThetaDomainError(spec.name + ": theta outside model domain");

  SystemMatrices<S> mdl = spec.build(theta);
  using detail::check_shape;
  using detail::check_stack;
  using detail::check_symmetric;
  check_shape(mdl.F, d.n, d.n, spec.name + ".F");
  check_shape(mdl.G, d.n, d.q, spec.name + ".G");
  check_shape(mdl.H, d.m, d.n, spec.name + ".H");
  check_shape(mdl.Q, d.q, d.q, spec.name + ".Q");
  check_shape(mdl.R, d.m, d.m, spec.name + ".R");
  check_shape(mdl.Pi0, d.n, d.n, spec.name + ".Pi0");
  check_shape(mdl.x0, d.n, 1, spec.name + ".x0");
  check_symmetric(mdl.Q, spec.name + ".Q");
  check_symmetric(mdl.R, spec.name + ".R");
  check_symmetric(mdl.Pi0, spec.name + ".Pi0");
  check_stack(mdl.dF, d.p, d.n, d.n, spec.name + ".dF");
  check_stack(mdl.dG, d.p, d.n, d.q, spec.name + ".dG");
  check_stack(mdl.dH, d.p, d.m, d.n, spec.name + ".dH");
  check_stack(mdl.dQ, d.p, d.q, d.q, spec.name + ".dQ", true);
  check_stack(mdl.dR, d.p, d.m, d.m, spec.name + ".dR", true);
  check_stack(mdl.dPi0, d.p, d.n, d.n, spec.name + ".dPi0", true);
  check_stack(mdl.dx0, d.p, d.n, 1, spec.name + ".dx0");
  return mdl;
}

// Two-state kinematic model whose lower-right transition entry decays with a
// time constant tau, the single estimated parameter. The position is
// observed; the rate is driven by scalar process noise.
template <class S>
ModelSpec<S> example1_model(double delta_t = 0.1) {
  if (!(delta_t > 0))
    throw ThetaDomainError("time-constant model: delta_t must be positive");
  Dimensions dims{2, 1, 1, 1};
  auto build = [delta_t](const std::vector<S>& theta) {
    using std::exp;
    const S dt(delta_t);
    const S tau = theta[0];
    const S decay = exp(-dt / tau);

    SystemMatrices<S> mdl{
        Matrix<S>{{1.0, delta_t}, {0.0, 0.0}},  // F; (1,1) patched below
        Matrix<S>{{0.0}, {1.0}},                // G
        Matrix<S>{{1.0, 0.0}},                  // H
        Matrix<S>::identity(1),                 // Q
        Matrix<S>::identity(1),                 // R
        Matrix<S>::identity(2),                 // Pi0
        Matrix<S>(2, 1),                        // x0
        {Matrix<S>(2, 2)},  {Matrix<S>(2, 1)},  {Matrix<S>(1, 2)},
        {Matrix<S>(1, 1)},  {Matrix<S>(1, 1)},  {Matrix<S>(2, 2)},
        {Matrix<S>(2, 1)}};
    mdl.F(1, 1) = decay;
    mdl.dF[0](1, 1) = dt / (tau * tau) * decay;
    return mdl;
  };
  return ModelSpec<S>{"example1", dims,
                      [](const std::vector<S>& t) { return t[0] > S(0); },
                      build};
}

// Three-state benchmark with two nearly collinear measurement rows separated
// by delta, scalar parameter theta scaling both the prior covariance and the
// measurement noise. The innovation covariance has condition of order
// 1/delta^2, which is what the accuracy experiments sweep.
template <class S>
ModelSpec<S> example3_model(double delta) {
  if (!(delta > 0))
    throw ThetaDomainError("collinear-measurement model: delta must be positive");
  Dimensions dims{3, 2, 1, 1};
  auto build = [delta](const std::vector<S>& theta) {
    const S d(delta);
    const S theta0 = theta[0];
    const S d2 = d * d;

    SystemMatrices<S> mdl{
        Matrix<S>::identity(3),                       // F
        Matrix<S>(3, 1),                              // G (no process noise)
        Matrix<S>{{1.0, 1.0, 1.0}, {1.0, 1.0, 0.0}},  // H; (1,2) patched
        Matrix<S>::identity(1),                       // Q
        Matrix<S>(2, 2),                              // R, filled below
        Matrix<S>(3, 3),                              // Pi0, filled below
        Matrix<S>(3, 1),                              // x0
        {Matrix<S>(3, 3)}, {Matrix<S>(3, 1)}, {Matrix<S>(2, 3)},
        {Matrix<S>(1, 1)}, {Matrix<S>(2, 2)}, {Matrix<S>(3, 3)},
        {Matrix<S>(3, 1)}};
    mdl.H(1, 2) = S(1) + d;
    for (int i = 0; i < 2; ++i) {
      mdl.R(i, i) = d2 * theta0;
      mdl.dR[0](i, i) = d2;
    }
    for (int i = 0; i < 3; ++i) {
      mdl.Pi0(i, i) = theta0;
      mdl.dPi0[0](i, i) = S(1);
    }
    return mdl;
  };
  return ModelSpec<S>{"example3", dims,
                      [](const std::vector<S>& t) { return t[0] > S(0); },
                      build};
}

}  // namespace srlg
