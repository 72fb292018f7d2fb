#ifndef GAMEPUT_AMERICAN_HPP
#define GAMEPUT_AMERICAN_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gameput/binomial_engine.hpp"

namespace gameput {

/// Binomial American put with n steps over `time_to_maturity` years.
inline double american_put(const ModelSpec& m, int n, LogPrice x0,
                           double time_to_maturity) {
  if (!(time_to_maturity >= 0.0) ||
      time_to_maturity > m.maturity() * (1.0 + 1e-12))
    throw ConfigError("time to maturity outside [0, T]");
  if (time_to_maturity == 0.0) return psi(m, x0);
  const LatticeSpec lat(m, n, x0, time_to_maturity);
  return optimal_stopping_root(lat, PutExercise{&lat}, Constant{0.0}, Never{});
}

inline double american_put(const ModelSpec& m, int n, LogPrice x0) {
  return american_put(m, n, x0, m.maturity());
}

/// Full American surface over [0, T], used for boundary extraction.
inline ValueSurface american_surface(const ModelSpec& m, int n, LogPrice x0) {
  const LatticeSpec lat(m, n, x0);
  return optimal_stopping_backward(lat, PutExercise{&lat}, Constant{0.0},
                                   Never{});
}

/// Step count used for reference-quality curve entries at level n.
inline int reference_steps(int n) { return std::max(2000, 4 * n); }

/// Two-point Richardson extrapolation in the step count, 2 V(2N) - V(N).
inline double american_put_extrapolated(const ModelSpec& m, int steps,
                                        LogPrice x0, double time_to_maturity) {
  if (time_to_maturity == 0.0) return psi(m, x0);
  const double coarse = american_put(m, steps, x0, time_to_maturity);
  const double fine = american_put(m, 2 * steps, x0, time_to_maturity);
  return 2.0 * fine - coarse;
}

/// Price of the at-the-money American put over the full maturity. Penalties
/// at or above this level make cancellation pointless for the writer.
inline double delta_star(const ModelSpec& m) {
  return american_put_extrapolated(m, reference_steps(0),
                                   LogPrice(m.log_strike()), m.maturity());
}

enum class CurveMode { kReference, kBinomial };

/// F_A(Tk/n, K) for k = 0..n, evaluated on demand.
///
/// Reference entries use reference_steps(n) steps with Richardson
/// extrapolation; binomial entries read the n-step lattice (step T/n) at time
/// Tk/n, i.e. an (n-k)-step pricing from spot K. Entries are cached; the
/// object is not safe for concurrent use.
class AmericanCurve {
public:
  AmericanCurve(const ModelSpec& model, int n, CurveMode mode)
      : model_(model), n_(n), mode_(mode),
        cache_(static_cast<std::size_t>(n) + 1,
               std::numeric_limits<double>::quiet_NaN()) {
    if (n < 1) throw ConfigError("curve needs at least one step");
    cache_[n] = 0.0;
  }

  int steps() const { return n_; }
  CurveMode mode() const { return mode_; }
  const ModelSpec& model() const { return model_; }
  double time(int k) const { return model_.maturity() * k / n_; }
  std::size_t size() const { return cache_.size(); }

  double at(int k) const {
    if (k < 0 || k > n_) throw ConfigError("curve index out of range");
    double& slot = cache_[k];
    if (std::isnan(slot)) slot = evaluate(k);
    return slot;
  }

  std::vector<double> values() const {
    for (int k = 0; k <= n_; ++k) at(k);
    return cache_;
  }

private:
  double evaluate(int k) const {
    const LogPrice atm(model_.log_strike());
    const double remaining = model_.maturity() * (n_ - k) / n_;
    if (mode_ == CurveMode::kReference)
      return american_put_extrapolated(model_, reference_steps(n_), atm,
                                       remaining);
    return american_put(model_, n_ - k, atm, remaining);
  }

  ModelSpec model_;
  int n_;
  CurveMode mode_;
  mutable std::vector<double> cache_;
};

inline AmericanCurve american_curve_at_strike(const ModelSpec& m, int n,
                                              CurveMode mode) {
  return {m, n, mode};
}

struct CutoffResult {
  int index = 0;
  double time = 0.0;
  /// Set when the penalty is at least the curve's initial value, in which
  /// case the writer never cancels and game prices reduce to American ones.
  bool no_cancellation = false;
};

/// Minimal k with penalty >= curve[k], falling back to n when no entry
/// qualifies. Uses bisection on the nonincreasing curve, then walks back over
/// any flat or slightly non-monotone stretch so the index is minimal locally.
inline CutoffResult compute_cutoff(const ModelSpec& m, int n,
                                   const AmericanCurve& curve) {
  if (curve.steps() != n) throw ConfigError("curve length does not match n");
  const double delta = m.penalty();
  auto make = [&](int idx) {
    return CutoffResult{idx, m.maturity() * idx / n, idx == 0};
  };
  if (delta >= curve.at(0)) return make(0);
  if (delta < curve.at(n)) return make(n);
  int lo = 0;  // delta < curve[lo]
  int hi = n;  // delta >= curve[hi]
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (delta >= curve.at(mid))
      hi = mid;
    else
      lo = mid;
  }
  while (hi > 1 && delta >= curve.at(hi - 1)) --hi;
  return make(hi);
}

/// Cutoff for the given mode, building the curve internally.
inline CutoffResult compute_cutoff(const ModelSpec& m, int n, CurveMode mode) {
  const AmericanCurve curve(m, n, mode);
  return compute_cutoff(m, n, curve);
}

/// Time at which the curve, linearly interpolated between its grid times,
/// falls to the penalty. Returns 0 when the penalty is at or above curve[0].
inline double crossing_time(const AmericanCurve& curve, double delta) {
  const int n = curve.steps();
  const ModelSpec m = curve.model().with_penalty(std::max(delta, 0.0));
  const CutoffResult cut = compute_cutoff(m, n, curve);
  if (cut.index == 0) return 0.0;
  const int k = cut.index;
  const double t0 = curve.time(k - 1);
  const double t1 = curve.time(k);
  const double f0 = curve.at(k - 1);
  const double f1 = curve.at(k);
  // Bisection on the linear interpolant, to 1e-6 T.
  double lo = t0;
  double hi = t1;
  const double tol = 1e-6 * m.maturity();
  auto interp = [&](double t) { return f0 + (f1 - f0) * (t - t0) / (t1 - t0); };
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (interp(mid) > delta)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace gameput

#endif  // GAMEPUT_AMERICAN_HPP
