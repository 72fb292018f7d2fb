#ifndef GAMEPUT_DISCRETE_OPERATOR_HPP
#define GAMEPUT_DISCRETE_OPERATOR_HPP

#include <cmath>
#include <utility>

#include "gameput/binomial_engine.hpp"

namespace gameput {

/// One-step mean increment of u along the undrifted walk:
/// (u(t+h, x+kappa*sqrt(h)) + u(t+h, x-kappa*sqrt(h))) / 2 - u(t, x).
///
/// Divided by h this approximates u_t + (kappa^2/2) u_xx, and it is exact for
/// functions quadratic in x and affine in t.
template <class Fn>
double discrete_operator_D(Fn&& u, double t, double x, double h,
                           double kappa) {
  const double step = kappa * std::sqrt(h);
  return 0.5 * (u(t + h, x + step) + u(t + h, x - step)) - u(t, x);
}

namespace detail {

// Returns (E u(jh, X_jh), E sum_{i<j} D u(ih, X_ih)) over the subtree rooted at
// walk offset k at step `depth`, each path weighted 2^-(j-depth).
template <class Fn>
std::pair<double, double> martingale_moments(Fn& u, const LatticeSpec& lat,
                                             int depth, int target, int k) {
  const double t = lat.time(depth);
  const double x = lat.x0().value + lat.model().kappa() * lat.sqrt_h() * k;
  if (depth == target) return {u(t, x), 0.0};
  const double local =
      discrete_operator_D(u, t, x, lat.h(), lat.model().kappa());
  const auto up = martingale_moments(u, lat, depth + 1, target, k + 1);
  const auto down = martingale_moments(u, lat, depth + 1, target, k - 1);
  return {0.5 * (up.first + down.first),
          local + 0.5 * (up.second + down.second)};
}

}  // namespace detail

inline constexpr int kMaxEnumerationDepth = 20;

/// |E u(t, X_t) - u(0, x0) - E sum D u((i-1)h, X_(i-1)h)| with t = j*h,
/// computed by exact enumeration of all 2^j walk paths. Zero up to rounding
/// for every u, because the compensated process is a martingale.
template <class Fn>
double martingale_decomposition_check(Fn&& u, const LatticeSpec& lat, int j) {
  if (j < 0 || j > lat.steps())
    throw ConfigError("time index outside lattice");
  if (j > kMaxEnumerationDepth)
    throw ConfigError("too many steps for exact path enumeration");
  const auto [terminal, drift] = detail::martingale_moments(u, lat, 0, j, 0);
  return std::abs(terminal - u(0.0, lat.x0().value) - drift);
}

}  // namespace gameput

#endif  // GAMEPUT_DISCRETE_OPERATOR_HPP
