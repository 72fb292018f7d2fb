#ifndef GAMEPUT_MODEL_HPP
#define GAMEPUT_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gameput {

/// Raised for invalid contract, lattice or run parameters.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative solver or a numerical contract fails.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Log of a stock price, x = ln S.
struct LogPrice {
  double value = 0.0;

  constexpr LogPrice() = default;
  constexpr explicit LogPrice(double x) : value(x) {}

  static LogPrice of_spot(double spot) {
    if (!(spot > 0.0)) throw ConfigError("spot must be positive");
    return LogPrice(std::log(spot));
  }
  double spot() const { return std::exp(value); }

  friend constexpr auto operator<=>(LogPrice, LogPrice) = default;
};

/// Black-Scholes market plus game put contract.
///
/// Fields are fixed at construction; the drift is always recomputed from the
/// rate and volatility so the two cannot drift apart.
class ModelSpec {
public:
  ModelSpec(double strike, double rate, double kappa, double maturity,
            double penalty)
      : strike_(strike), rate_(rate), kappa_(kappa), maturity_(maturity),
        penalty_(penalty) {
    if (!(strike > 0.0) || !std::isfinite(strike))
      throw ConfigError("strike must be positive");
    if (!(kappa > 0.0) || !std::isfinite(kappa))
      throw ConfigError("volatility must be positive");
    if (!(maturity > 0.0) || !std::isfinite(maturity))
      throw ConfigError("maturity must be positive");
    if (!(rate >= 0.0) || !std::isfinite(rate))
      throw ConfigError("rate must be non-negative");
    if (!(penalty >= 0.0) || !std::isfinite(penalty))
      throw ConfigError("penalty must be non-negative");
  }

  double strike() const { return strike_; }
  double rate() const { return rate_; }
  double kappa() const { return kappa_; }
  double maturity() const { return maturity_; }
  double penalty() const { return penalty_; }
  double mu() const { return rate_ - 0.5 * kappa_ * kappa_; }
  double log_strike() const { return std::log(strike_); }

  ModelSpec with_penalty(double penalty) const {
    return {strike_, rate_, kappa_, maturity_, penalty};
  }
  ModelSpec with_maturity(double maturity) const {
    return {strike_, rate_, kappa_, maturity, penalty_};
  }

private:
  double strike_;
  double rate_;
  double kappa_;
  double maturity_;
  double penalty_;
};

inline ModelSpec make_model(double strike, double rate, double kappa,
                            double maturity, double penalty) {
  return {strike, rate, kappa, maturity, penalty};
}

/// Put payoff in price units, (K - S)^+.
inline double put_payoff(const ModelSpec& m, double spot) {
  return std::max(m.strike() - spot, 0.0);
}

/// Put payoff in log-price, (K - e^x)^+.
inline double psi(const ModelSpec& m, LogPrice x) {
  return put_payoff(m, std::exp(x.value));
}

/// Writer's cancellation payment: payoff plus penalty.
inline double psi_plus_delta(const ModelSpec& m, LogPrice x) {
  return psi(m, x) + m.penalty();
}

}  // namespace gameput

#endif  // GAMEPUT_MODEL_HPP
