#ifndef GAMEPUT_BINOMIAL_ENGINE_HPP
#define GAMEPUT_BINOMIAL_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "gameput/model.hpp"

namespace gameput {

/// Recombining lattice of the scaled symmetric random walk.
///
/// Node (j, k) sits at time j*h with walk offset k, where |k| <= j and k has
/// the parity of j. The undrifted coordinate is x0 + kappa*sqrt(h)*k; payoffs
/// are evaluated at the drifted coordinate, which adds mu*j*h.
class LatticeSpec {
public:
  LatticeSpec(const ModelSpec& model, int n, LogPrice x0)
      : LatticeSpec(model, n, x0, model.maturity()) {}

  /// Lattice spanning `span` years instead of the full maturity.
  LatticeSpec(const ModelSpec& model, int n, LogPrice x0, double span)
      : model_(model), n_(n), span_(span), x0_(x0) {
    if (n < 1) throw ConfigError("lattice needs at least one step");
    if (!(span > 0.0) || !std::isfinite(span))
      throw ConfigError("lattice span must be positive");
    if (!std::isfinite(x0.value)) throw ConfigError("x0 must be finite");
    h_ = span / n;
    sqrt_h_ = std::sqrt(h_);
    discount_ = std::exp(-model.rate() * h_);
    growth_.resize(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j)
      growth_[j] = std::exp(x0.value + model.mu() * j * h_);
    up_.resize(2 * static_cast<std::size_t>(n) + 1);
    for (int k = -n; k <= n; ++k)
      up_[k + n] = std::exp(model.kappa() * sqrt_h_ * k);
  }

  const ModelSpec& model() const { return model_; }
  int steps() const { return n_; }
  double span() const { return span_; }
  double h() const { return h_; }
  double sqrt_h() const { return sqrt_h_; }
  LogPrice x0() const { return x0_; }
  double discount() const { return discount_; }
  double time(int j) const { return j * h_; }

  bool valid_node(int j, int k) const {
    return j >= 0 && j <= n_ && k >= -j && k <= j && ((j + k) & 1) == 0;
  }
  void check_node(int j, int k) const {
    if (!valid_node(j, k)) throw ConfigError("invalid lattice node");
  }

  /// x0 + kappa*sqrt(h)*k.
  LogPrice undrifted(int j, int k) const {
    check_node(j, k);
    return LogPrice(x0_.value + model_.kappa() * sqrt_h_ * k);
  }
  /// x0 + mu*j*h + kappa*sqrt(h)*k.
  LogPrice node_logprice(int j, int k) const {
    check_node(j, k);
    return LogPrice(x0_.value + model_.mu() * j * h_ +
                    model_.kappa() * sqrt_h_ * k);
  }
  /// Price at the drifted coordinate, read from precomputed tables. Unchecked.
  double node_price(int j, int k) const { return growth_[j] * up_[k + n_]; }
  /// Put payoff at node (j, k). Unchecked.
  double payoff(int j, int k) const {
    return put_payoff(model_, node_price(j, k));
  }

private:
  ModelSpec model_;
  int n_;
  double span_;
  LogPrice x0_;
  double h_ = 0.0;
  double sqrt_h_ = 0.0;
  double discount_ = 1.0;
  std::vector<double> growth_;
  std::vector<double> up_;
};

enum class RegionFlag : std::uint8_t {
  kContinue = 0,
  kHolderStop = 1,
  kWriterCancel = 2,
  kTerminal = 3,
};

/// Node values and region flags over a whole lattice, stored level by level.
class ValueSurface {
public:
  explicit ValueSurface(LatticeSpec lattice)
      : lattice_(std::move(lattice)) {
    const auto n = static_cast<std::size_t>(lattice_.steps());
    values_.assign((n + 1) * (n + 2) / 2, 0.0);
    flags_.assign(values_.size(), RegionFlag::kContinue);
  }

  const LatticeSpec& lattice() const { return lattice_; }
  int steps() const { return lattice_.steps(); }

  double value(int j, int k) const { return values_[index(j, k)]; }
  RegionFlag flag(int j, int k) const { return flags_[index(j, k)]; }
  double root() const { return values_[0]; }

  std::span<double> level_values(int j) {
    return {values_.data() + offset(j), static_cast<std::size_t>(j) + 1};
  }
  std::span<const double> level_values(int j) const {
    return {values_.data() + offset(j), static_cast<std::size_t>(j) + 1};
  }
  std::span<RegionFlag> level_flags(int j) {
    return {flags_.data() + offset(j), static_cast<std::size_t>(j) + 1};
  }
  std::span<const RegionFlag> level_flags(int j) const {
    return {flags_.data() + offset(j), static_cast<std::size_t>(j) + 1};
  }

private:
  static std::size_t offset(int j) {
    const auto jj = static_cast<std::size_t>(j);
    return jj * (jj + 1) / 2;
  }
  std::size_t index(int j, int k) const {
    lattice_.check_node(j, k);
    return offset(j) + static_cast<std::size_t>((k + j) / 2);
  }

  LatticeSpec lattice_;
  std::vector<double> values_;
  std::vector<RegionFlag> flags_;
};

namespace detail {

inline double tie_tolerance(const LatticeSpec& lat) {
  return 1e-12 * lat.model().strike();
}

// Runs the level recursion from j = n down to 0 and reports every finished
// level to `sink(j, values, flags)`. Only two rows are held at once.
template <class Exercise, class CancelPayoff, class CancelSet, class Sink>
void stopping_sweep(const LatticeSpec& lat, Exercise&& exercise,
                    CancelPayoff&& cancel_payoff, CancelSet&& cancel_set,
                    Sink&& sink) {
  const int n = lat.steps();
  const double disc = lat.discount();
  const double tol = tie_tolerance(lat);
  std::vector<double> next(static_cast<std::size_t>(n) + 1);
  std::vector<double> cur(static_cast<std::size_t>(n) + 1);
  std::vector<RegionFlag> flags(static_cast<std::size_t>(n) + 1);

  for (int i = 0; i <= n; ++i) {
    next[i] = exercise(n, 2 * i - n);
    flags[i] = RegionFlag::kTerminal;
  }
  sink(n, std::span<const double>(next.data(), n + 1),
       std::span<const RegionFlag>(flags.data(), n + 1));

  for (int j = n - 1; j >= 0; --j) {
    for (int i = 0; i <= j; ++i) {
      const int k = 2 * i - j;
      const double ex = exercise(j, k);
      if (cancel_set(j, k)) {
        const double cp = cancel_payoff(j, k);
        cur[i] = std::max(ex, cp);
        flags[i] = ex > cp + tol ? RegionFlag::kHolderStop
                                 : RegionFlag::kWriterCancel;
        continue;
      }
      const double cont = disc * 0.5 * (next[i + 1] + next[i]);
      if (ex > cont + tol) {
        cur[i] = ex;
        flags[i] = RegionFlag::kHolderStop;
      } else {
        cur[i] = std::max(ex, cont);
        flags[i] = RegionFlag::kContinue;
      }
    }
    sink(j, std::span<const double>(cur.data(), j + 1),
         std::span<const RegionFlag>(flags.data(), j + 1));
    std::swap(cur, next);
  }
}

template <class Lower, class Upper, class Sink>
void dynkin_sweep(const LatticeSpec& lat, Lower&& lower, Upper&& upper,
                  Sink&& sink) {
  const int n = lat.steps();
  const double disc = lat.discount();
  const double tol = tie_tolerance(lat);
  std::vector<double> next(static_cast<std::size_t>(n) + 1);
  std::vector<double> cur(static_cast<std::size_t>(n) + 1);
  std::vector<RegionFlag> flags(static_cast<std::size_t>(n) + 1);

  for (int i = 0; i <= n; ++i) {
    next[i] = lower(n, 2 * i - n);
    flags[i] = RegionFlag::kTerminal;
  }
  sink(n, std::span<const double>(next.data(), n + 1),
       std::span<const RegionFlag>(flags.data(), n + 1));

  for (int j = n - 1; j >= 0; --j) {
    for (int i = 0; i <= j; ++i) {
      const int k = 2 * i - j;
      const double lo = lower(j, k);
      const double up = upper(j, k);
      if (lo > up) throw ConfigError("obstacle ordering violation");
      const double cont = disc * 0.5 * (next[i + 1] + next[i]);
      cur[i] = std::min(up, std::max(lo, cont));
      if (lo > cont + tol)
        flags[i] = RegionFlag::kHolderStop;
      else if (up < cont - tol)
        flags[i] = RegionFlag::kWriterCancel;
      else
        flags[i] = RegionFlag::kContinue;
    }
    sink(j, std::span<const double>(cur.data(), j + 1),
         std::span<const RegionFlag>(flags.data(), j + 1));
    std::swap(cur, next);
  }
}

struct SurfaceSink {
  ValueSurface* surface;
  void operator()(int j, std::span<const double> v,
                  std::span<const RegionFlag> f) const {
    std::copy(v.begin(), v.end(), surface->level_values(j).begin());
    std::copy(f.begin(), f.end(), surface->level_flags(j).begin());
  }
};

struct RootSink {
  double* root;
  void operator()(int j, std::span<const double> v,
                  std::span<const RegionFlag>) const {
    if (j == 0) *root = v[0];
  }
};

}  // namespace detail

/// Optimal stopping for the holder with an absorbing cancellation set.
///
/// At a cancellation node the game ends: the holder receives the larger of the
/// exercise value and the cancellation payment (simultaneous stopping pays the
/// holder's claim). Elsewhere the holder compares exercise with the
/// discounted mean of the two successors.
template <class Exercise, class CancelPayoff, class CancelSet>
ValueSurface optimal_stopping_backward(const LatticeSpec& lat,
                                       Exercise&& exercise,
                                       CancelPayoff&& cancel_payoff,
                                       CancelSet&& cancel_set) {
  ValueSurface surface(lat);
  detail::stopping_sweep(lat, exercise, cancel_payoff, cancel_set,
                         detail::SurfaceSink{&surface});
  return surface;
}

/// Same recursion as optimal_stopping_backward, keeping only two rows.
template <class Exercise, class CancelPayoff, class CancelSet>
double optimal_stopping_root(const LatticeSpec& lat, Exercise&& exercise,
                             CancelPayoff&& cancel_payoff,
                             CancelSet&& cancel_set) {
  double root = 0.0;
  detail::stopping_sweep(lat, exercise, cancel_payoff, cancel_set,
                         detail::RootSink{&root});
  return root;
}

/// Discrete Dynkin game: V = min(upper, max(lower, continuation)), V = lower
/// at maturity. Throws if lower > upper at a node before maturity.
template <class Lower, class Upper>
ValueSurface dynkin_backward(const LatticeSpec& lat, Lower&& lower,
                             Upper&& upper) {
  ValueSurface surface(lat);
  detail::dynkin_sweep(lat, lower, upper, detail::SurfaceSink{&surface});
  return surface;
}

template <class Lower, class Upper>
double dynkin_root(const LatticeSpec& lat, Lower&& lower, Upper&& upper) {
  double root = 0.0;
  detail::dynkin_sweep(lat, lower, upper, detail::RootSink{&root});
  return root;
}

/// Convenience callables for the common payoffs.
struct PutExercise {
  const LatticeSpec* lat;
  double operator()(int j, int k) const { return lat->payoff(j, k); }
};

struct PutCancel {
  const LatticeSpec* lat;
  double operator()(int j, int k) const {
    return lat->payoff(j, k) + lat->model().penalty();
  }
};

struct Constant {
  double c;
  double operator()(int, int) const { return c; }
};

struct Never {
  bool operator()(int, int) const { return false; }
};

inline constexpr double kNoUpperObstacle =
    std::numeric_limits<double>::infinity();

}  // namespace gameput

#endif  // GAMEPUT_BINOMIAL_ENGINE_HPP
