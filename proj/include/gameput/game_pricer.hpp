#ifndef GAMEPUT_GAME_PRICER_HPP
#define GAMEPUT_GAME_PRICER_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <string_view>

#include "gameput/american.hpp"
#include "gameput/binomial_engine.hpp"

namespace gameput {

/// Writer's cancellation strip around ln K, active for times below `horizon`.
struct BandSpec {
  LogPrice lower;
  LogPrice upper;
  double horizon = 0.0;
};

/// Half-width |mu| h + 2 kappa sqrt(h) of the cancellation strip.
inline double band_half_width(const ModelSpec& m, double h) {
  return std::abs(m.mu()) * h + 2.0 * m.kappa() * std::sqrt(h);
}

inline BandSpec make_band(const ModelSpec& m, double h, double horizon) {
  if (!(horizon >= 0.0) || horizon > m.maturity() * (1.0 + 1e-12))
    throw ConfigError("band horizon outside [0, T]");
  const double lambda = band_half_width(m, h);
  return {LogPrice(m.log_strike() - lambda), LogPrice(m.log_strike() + lambda),
          horizon};
}

/// True iff j h < horizon and the drifted walk mu j h + x lies strictly
/// inside the strip.
inline bool in_band(const ModelSpec& m, double h, int j, LogPrice x_undrifted,
                    const BandSpec& band) {
  // j h is compared with a relative guard so j h == horizon stays outside
  // even when the two products round differently.
  if (!(j * h < band.horizon - 1e-9 * h)) return false;
  const double drifted = m.mu() * j * h + x_undrifted.value;
  return band.lower.value < drifted && drifted < band.upper.value;
}

enum class Variant { kP1, kP2, kDynkin, kAmerican };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kP1: return "p1";
    case Variant::kP2: return "p2";
    case Variant::kDynkin: return "dynkin";
    case Variant::kAmerican: return "american";
  }
  return "?";
}

/// Cancellation payment used by P1 when the walk starts above the strike.
enum class ExteriorPayoff {
  /// delta - K e (|mu| h + 2 kappa sqrt(h)), with e Euler's number.
  kBandBound,
  /// delta - K exp(|mu| sqrt(h) + kappa h), the alternative reading.
  kLiteralExponent,
};

struct PricingOptions {
  bool keep_surface = true;
  ExteriorPayoff exterior = ExteriorPayoff::kBandBound;
};

struct GamePriceResult {
  double value = 0.0;
  std::optional<ValueSurface> surface;
  double beta_n = 0.0;
  Variant variant = Variant::kDynkin;
};

namespace detail {

inline void check_horizon(const ModelSpec& m, int n, double s) {
  if (n < 1) throw ConfigError("n must be at least 1");
  const double h = m.maturity() / n;
  if (!(s >= 0.0) || s > m.maturity() * (1.0 + 1e-12))
    throw ConfigError("cancellation horizon outside [0, T]");
  const double steps = s / h;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    throw ConfigError("cancellation horizon must be a multiple of T/n");
}

struct BandMembership {
  const LatticeSpec* lat;
  BandSpec band;
  bool operator()(int j, int k) const {
    return in_band(lat->model(), lat->h(), j,
                   LogPrice(lat->x0().value +
                            lat->model().kappa() * lat->sqrt_h() * k),
                   band);
  }
};

// `make_payoff(lattice)` builds the cancellation payment callable.
template <class MakePayoff>
GamePriceResult price_with_band(const ModelSpec& m, int n, LogPrice x0,
                                double s, Variant variant,
                                MakePayoff make_payoff,
                                const PricingOptions& opt) {
  const LatticeSpec lat(m, n, x0);
  const BandMembership band{&lat, make_band(m, lat.h(), s)};
  const auto cp = make_payoff(lat);
  GamePriceResult out;
  out.beta_n = s;
  out.variant = variant;
  if (opt.keep_surface) {
    out.surface = optimal_stopping_backward(lat, PutExercise{&lat}, cp, band);
    out.value = out.surface->root();
  } else {
    out.value = optimal_stopping_root(lat, PutExercise{&lat}, cp, band);
  }
  return out;
}

}  // namespace detail

/// Constant cancellation payment of P1 for a walk started at x0.
inline double p1_cancel_payment(const ModelSpec& m, int n, LogPrice x0,
                                ExteriorPayoff exterior) {
  if (x0.value <= m.log_strike()) return m.penalty();
  const double h = m.maturity() / n;
  if (exterior == ExteriorPayoff::kLiteralExponent)
    return m.penalty() -
           m.strike() * std::exp(std::abs(m.mu()) * std::sqrt(h) +
                                 m.kappa() * h);
  return m.penalty() - m.strike() * std::numbers::e * band_half_width(m, h);
}

/// First approximation: the writer cancels at the first strip visit before s
/// and pays a constant.
inline GamePriceResult price_p1(const ModelSpec& m, int n, LogPrice x0,
                                double s, const PricingOptions& opt = {}) {
  detail::check_horizon(m, n, s);
  const double pay = p1_cancel_payment(m, n, x0, opt.exterior);
  return detail::price_with_band(
      m, n, x0, s, Variant::kP1,
      [pay](const LatticeSpec&) { return Constant{pay}; }, opt);
}

/// Second approximation: as P1, but the writer pays psi + delta at the node.
inline GamePriceResult price_p2(const ModelSpec& m, int n, LogPrice x0,
                                double s, const PricingOptions& opt = {}) {
  detail::check_horizon(m, n, s);
  return detail::price_with_band(
      m, n, x0, s, Variant::kP2,
      [](const LatticeSpec& lat) { return PutCancel{&lat}; }, opt);
}

/// Full binomial Dynkin game between holder and writer.
inline GamePriceResult price_dynkin(const ModelSpec& m, int n, LogPrice x0,
                                    const PricingOptions& opt = {}) {
  const LatticeSpec lat(m, n, x0);
  GamePriceResult out;
  out.variant = Variant::kDynkin;
  if (opt.keep_surface) {
    out.surface = dynkin_backward(lat, PutExercise{&lat}, PutCancel{&lat});
    out.value = out.surface->root();
  } else {
    out.value = dynkin_root(lat, PutExercise{&lat}, PutCancel{&lat});
  }
  return out;
}

/// Reclassifies every node by which obstacle its value touches, within
/// 1e-10 K. The holder's obstacle is tested first, so coinciding obstacles
/// (delta = 0) report no writer region.
inline ValueSurface classify_regions(const GamePriceResult& result) {
  if (!result.surface) throw ConfigError("pricing result has no surface");
  ValueSurface out = *result.surface;
  const LatticeSpec& lat = out.lattice();
  const double tol = 1e-10 * lat.model().strike();
  const double delta = lat.model().penalty();
  const int n = lat.steps();
  for (int j = 0; j <= n; ++j) {
    auto values = out.level_values(j);
    auto flags = out.level_flags(j);
    for (int i = 0; i <= j; ++i) {
      if (j == n) {
        flags[i] = RegionFlag::kTerminal;
        continue;
      }
      const double lower = lat.payoff(j, 2 * i - j);
      if (values[i] - lower <= tol)
        flags[i] = RegionFlag::kHolderStop;
      else if (lower + delta - values[i] <= tol)
        flags[i] = RegionFlag::kWriterCancel;
      else
        flags[i] = RegionFlag::kContinue;
    }
  }
  return out;
}

/// Cancellation horizon for level n: beta^(n) from the reference curve or
/// gamma^(n) from the binomial curve.
inline CutoffResult cancellation_cutoff(const ModelSpec& m, int n,
                                        CurveMode mode) {
  return compute_cutoff(m, n, mode);
}

}  // namespace gameput

#endif  // GAMEPUT_GAME_PRICER_HPP
