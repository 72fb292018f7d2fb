#ifndef GAMEPUT_STOPPING_ORACLE_HPP
#define GAMEPUT_STOPPING_ORACLE_HPP

// Brute-force references for the lattice kernels on tiny trees. Every
// stopping time adapted to the walk filtration is listed explicitly and the
// expected payoff is averaged path by path, with no recursion on values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "gameput/binomial_engine.hpp"

namespace gameput {

inline constexpr int kMaxOracleSteps = 4;

/// A stopping time on the depth-n binary tree, as the stop step of every path.
/// Path p takes step i (1-based) upwards iff bit (n - i) of p is set, so the
/// paths sharing a prefix of length d form a contiguous block of 2^(n-d).
using StopRule = std::vector<std::uint8_t>;

namespace detail {

inline std::vector<StopRule> stopping_times_below(int depth, int n) {
  const std::size_t width = std::size_t{1} << (n - depth);
  std::vector<StopRule> rules;
  rules.emplace_back(width, static_cast<std::uint8_t>(depth));
  if (depth == n) return rules;
  const auto sub = stopping_times_below(depth + 1, n);
  rules.reserve(1 + sub.size() * sub.size());
  for (const auto& down : sub) {
    for (const auto& up : sub) {
      StopRule r(down);
      r.insert(r.end(), up.begin(), up.end());
      rules.push_back(std::move(r));
    }
  }
  return rules;
}

// Walk offset after `steps` steps along path p.
inline int path_offset(unsigned p, int n, int steps) {
  int k = 0;
  for (int i = 1; i <= steps; ++i) k += ((p >> (n - i)) & 1U) ? 1 : -1;
  return k;
}

inline void check_oracle_size(const LatticeSpec& lat) {
  if (lat.steps() > kMaxOracleSteps)
    throw ConfigError("enumeration oracle limited to 4 steps");
}

}  // namespace detail

/// All adapted stopping times with values in {0, ..., n}. There are
/// 1, 2, 5, 26, 677 of them for n = 0..4.
inline std::vector<StopRule> enumerate_stopping_times(int n) {
  if (n < 0 || n > kMaxOracleSteps)
    throw ConfigError("enumeration oracle limited to 4 steps");
  return detail::stopping_times_below(0, n);
}

/// Sup over every adapted holder stopping time of the expected discounted
/// payoff, where the game is forced to end at the first cancellation node
/// before maturity. Simultaneous stopping pays the exercise value.
template <class Exercise, class CancelPayoff, class CancelSet>
double enumerate_stopping_oracle(const LatticeSpec& lat, Exercise&& exercise,
                                 CancelPayoff&& cancel_payoff,
                                 CancelSet&& cancel_set) {
  detail::check_oracle_size(lat);
  const int n = lat.steps();
  const unsigned paths = 1U << n;
  const double r = lat.model().rate();
  const double h = lat.h();

  std::vector<int> sigma(paths, n);
  for (unsigned p = 0; p < paths; ++p) {
    for (int j = 0; j < n; ++j) {
      if (cancel_set(j, detail::path_offset(p, n, j))) {
        sigma[p] = j;
        break;
      }
    }
  }

  double best = -std::numeric_limits<double>::infinity();
  for (const auto& rule : enumerate_stopping_times(n)) {
    double total = 0.0;
    for (unsigned p = 0; p < paths; ++p) {
      const int tau = rule[p];
      const int s = sigma[p];
      if (tau <= s) {
        total += std::exp(-r * tau * h) *
                 exercise(tau, detail::path_offset(p, n, tau));
      } else {
        total += std::exp(-r * s * h) *
                 cancel_payoff(s, detail::path_offset(p, n, s));
      }
    }
    best = std::max(best, total / paths);
  }
  return best;
}

/// Inf over writer stopping times of the sup over holder stopping times of the
/// expected discounted game payoff: lower(tau) if tau <= sigma, otherwise
/// upper(sigma). A writer time equal to n means no cancellation.
template <class Lower, class Upper>
double enumerate_dynkin_oracle(const LatticeSpec& lat, Lower&& lower,
                               Upper&& upper) {
  detail::check_oracle_size(lat);
  const int n = lat.steps();
  const unsigned paths = 1U << n;
  const double r = lat.model().rate();
  const double h = lat.h();
  const auto rules = enumerate_stopping_times(n);

  // Payoff tables indexed by (path, step) to keep the double loop cheap.
  std::vector<double> lo(paths * (n + 1));
  std::vector<double> up(paths * (n + 1));
  for (unsigned p = 0; p < paths; ++p) {
    for (int j = 0; j <= n; ++j) {
      const int k = detail::path_offset(p, n, j);
      const double disc = std::exp(-r * j * h);
      lo[p * (n + 1) + j] = disc * lower(j, k);
      up[p * (n + 1) + j] = j < n ? disc * upper(j, k) : 0.0;
    }
  }

  double value = std::numeric_limits<double>::infinity();
  for (const auto& writer : rules) {
    double holder_best = -std::numeric_limits<double>::infinity();
    for (const auto& holder : rules) {
      double total = 0.0;
      for (unsigned p = 0; p < paths; ++p) {
        const int tau = holder[p];
        const int s = writer[p];
        total += tau <= s ? lo[p * (n + 1) + tau] : up[p * (n + 1) + s];
      }
      holder_best = std::max(holder_best, total / paths);
    }
    value = std::min(value, holder_best);
  }
  return value;
}

}  // namespace gameput

#endif  // GAMEPUT_STOPPING_ORACLE_HPP
