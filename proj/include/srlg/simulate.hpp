#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "kernels.hpp"
#include "matrix.hpp"
#include "state_space.hpp"

namespace srlg {

// Name recorded in config echoes so output files identify the exact
// generator algorithm.
inline constexpr const char* kGeneratorName = "mt19937_64-box-muller";

// Standard-normal draws from mt19937_64 through an explicit Box-Muller map.
// std::normal_distribution is not bit-portable across standard libraries;
// this is, because mt19937_64 output is pinned by the standard and the
// transform below is plain arithmetic.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : eng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  // 53-bit mantissa draw mapped into (0, 1] so the log above stays finite.
  double uniform01() {
    return static_cast<double>((eng_() >> 11) + 1) * 0x1p-53;
  }

  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct Trajectory {
  std::vector<Matrix<double>> x;  // true states, one n-column per step
  std::vector<Matrix<double>> z;  // measurements, one m-column per step
};

namespace detail {

inline Matrix<double> correlated_draw(GaussianSampler& g,
                                      const UpperTriangular<double>& factor) {
  Matrix<double> xi(factor.dim(), 1);
  for (int i = 0; i < factor.dim(); ++i) xi(i, 0) = g.next();
  // cov(U^T xi) = U^T U, the factored covariance.
  return factor.mat().transposed() * xi;
}

}  // namespace detail

// Draws x_1 ~ N(x0, Pi0), then z_k = H x_k + v_k and
// x_{k+1} = F x_k + G w_k with v ~ N(0, R), w ~ N(0, Q).
// Draw order is fixed (x_1, then per step v_k, then w_k) so a seed pins the
// whole trajectory bitwise. zero_noise propagates the deterministic system.
inline Trajectory simulate(const SystemMatrices<double>& mdl, int N,
                           std::uint64_t seed, bool zero_noise = false) {
  if (N < 1) throw DimensionError("simulate: N must be at least 1");
  const auto pi0_factor = cholesky_upper(mdl.Pi0);
  const auto q_factor = cholesky_upper(mdl.Q);
  const auto r_factor = cholesky_upper(mdl.R);

  GaussianSampler g(seed);
  Trajectory traj;
  traj.x.reserve(N);
  traj.z.reserve(N);

  Matrix<double> x = mdl.x0;
  if (!zero_noise) x = x + detail::correlated_draw(g, pi0_factor);
  for (int k = 0; k < N; ++k) {
    traj.x.push_back(x);
    Matrix<double> z = mdl.H * x;
    if (!zero_noise) z = z + detail::correlated_draw(g, r_factor);
    traj.z.push_back(std::move(z));
    if (k + 1 < N) {
      x = mdl.F * x;
      if (!zero_noise) x = x + mdl.G * detail::correlated_draw(g, q_factor);
    }
  }
  return traj;
}

}  // namespace srlg
