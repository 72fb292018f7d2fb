#ifndef GAMEPUT_PDE_ORACLE_HPP
#define GAMEPUT_PDE_ORACLE_HPP

// Finite-difference reference for the continuous game and American put.
//
// Works in x = ln S on a uniform grid, stepping backward from maturity with an
// implicit scheme (BDF2 by default, implicit Euler on request). Each step is a linear complementarity problem with
// box constraints psi <= P <= psi + delta (no upper bound for the American
// put), solved by projected SOR.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gameput/model.hpp"

namespace gameput {

enum class TimeScheme {
  kImplicitEuler,
  /// Second-order backward differences, started with one implicit Euler step.
  kBdf2,
};

struct PdeOptions {
  TimeScheme scheme = TimeScheme::kBdf2;
  double omega = 1.5;
  double tolerance = 1e-10;
  int max_iterations = 10000;
  /// Keep every time row. When false only t = 0 is retained.
  bool keep_history = true;
};

struct Domain {
  double x_min;
  double x_max;
};

/// ln K -/+ (6 kappa sqrt(T) + |mu| T).
inline Domain default_domain(const ModelSpec& m) {
  const double half =
      6.0 * m.kappa() * std::sqrt(m.maturity()) + std::abs(m.mu()) * m.maturity();
  return {m.log_strike() - half, m.log_strike() + half};
}

/// Solved grid. Row r holds time t_r; rows run from t = 0 to t = T unless
/// only the initial row was kept.
class PdeGrid {
public:
  PdeGrid(const ModelSpec& model, Domain domain, int nx, int nt, bool game)
      : model_(model), domain_(domain), nx_(nx), nt_(nt), game_(game) {
    dx_ = (domain.x_max - domain.x_min) / (nx - 1);
    dt_ = model.maturity() / nt;
    lower_.resize(nx);
    upper_.resize(nx);
    for (int i = 0; i < nx; ++i) {
      lower_[i] = psi(model, LogPrice(x(i)));
      upper_[i] =
          game ? lower_[i] + model.penalty() : std::numeric_limits<double>::infinity();
    }
  }

  const ModelSpec& model() const { return model_; }
  bool is_game() const { return game_; }
  int nx() const { return nx_; }
  int nt() const { return nt_; }
  double dx() const { return dx_; }
  double dt() const { return dt_; }
  double x_min() const { return domain_.x_min; }
  double x_max() const { return domain_.x_max; }
  double x(int i) const { return domain_.x_min + i * dx_; }
  double t(int row) const { return row * dt_; }
  bool has_history() const { return rows_.size() == static_cast<std::size_t>(nt_) + 1; }

  /// Value at time row `row` (0 is t = 0) and space index i.
  double value(int row, int i) const {
    return rows_.at(static_cast<std::size_t>(row)).at(static_cast<std::size_t>(i));
  }
  const std::vector<double>& row(int r) const { return rows_.at(static_cast<std::size_t>(r)); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  /// Largest PSOR iteration count over all steps.
  int max_iterations_used() const { return max_iters_used_; }

private:
  friend PdeGrid solve_obstacle_problem(const ModelSpec&, Domain, int, int,
                                        bool, const PdeOptions&);

  ModelSpec model_;
  Domain domain_;
  int nx_;
  int nt_;
  bool game_;
  double dx_ = 0.0;
  double dt_ = 0.0;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<std::vector<double>> rows_;
  int max_iters_used_ = 0;
};

namespace detail {

// Projected SOR for the tridiagonal system
//   diag v_i - sub v_{i-1} - sup v_{i+1} = rhs_i,  lower <= v <= upper,
// with v_0 and v_{nx-1} held fixed. Returns the iteration count.
inline int projected_sor(std::vector<double>& v, const std::vector<double>& rhs,
                         double diag, double sub, double sup,
                         const std::vector<double>& lower,
                         const std::vector<double>& upper,
                         const PdeOptions& opt) {
  const int nx = static_cast<int>(v.size());
  const double inv = 1.0 / diag;
  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    double change = 0.0;
    for (int i = 1; i < nx - 1; ++i) {
      const double gs = (rhs[i] + sub * v[i - 1] + sup * v[i + 1]) * inv;
      double next = v[i] + opt.omega * (gs - v[i]);
      next = std::clamp(next, lower[i], upper[i]);
      change = std::max(change, std::abs(next - v[i]));
      v[i] = next;
    }
    if (change <= opt.tolerance) return iter;
  }
  throw NumericalError("projected SOR did not converge within " +
                       std::to_string(opt.max_iterations) + " iterations");
}

}  // namespace detail

inline PdeGrid solve_obstacle_problem(const ModelSpec& m, Domain domain, int nx,
                                      int nt, bool game,
                                      const PdeOptions& opt = {}) {
  if (nx < 16 || nt < 16) throw ConfigError("grid needs at least 16 points per axis");
  if (!(domain.x_min < domain.x_max)) throw ConfigError("empty space domain");
  const double lnk = m.log_strike();
  const double spread = 3.0 * m.kappa() * std::sqrt(m.maturity());
  if (!(domain.x_min < lnk - spread && lnk + spread < domain.x_max))
    throw ConfigError("space domain too narrow around the strike");

  PdeGrid grid(m, domain, nx, nt, game);
  const double dx = grid.dx();
  const double dt = grid.dt();
  const double k2 = m.kappa() * m.kappa();
  // A v = alpha_- v_{i-1} - (2 alpha + r) v_i + alpha_+ v_{i+1}.
  const double alpha = 0.5 * k2 / (dx * dx);
  const double drift = 0.5 * m.mu() / dx;
  const double a_minus = alpha - drift;
  const double a_plus = alpha + drift;
  const double a_diag = 2.0 * alpha + m.rate();

  const double left = m.strike() - std::exp(domain.x_min);
  const double right = 0.0;

  std::vector<double> later(grid.lower_);  // t = T
  std::vector<double> later2;
  std::vector<double> current(nx);
  std::vector<double> rhs(nx);
  std::vector<std::vector<double>> history;
  if (opt.keep_history) history.push_back(later);

  for (int step = 1; step <= nt; ++step) {
    const bool bdf2 = opt.scheme == TimeScheme::kBdf2 && step >= 2;
    double diag;
    if (bdf2) {
      diag = 1.5 + dt * a_diag;
      for (int i = 0; i < nx; ++i) rhs[i] = 2.0 * later[i] - 0.5 * later2[i];
    } else {
      diag = 1.0 + dt * a_diag;
      rhs = later;
    }
    current = later;
    current.front() = left;
    current.back() = right;
    const int iters = detail::projected_sor(current, rhs, diag, dt * a_minus,
                                            dt * a_plus, grid.lower_,
                                            grid.upper_, opt);
    grid.max_iters_used_ = std::max(grid.max_iters_used_, iters);
    later2 = std::move(later);
    later = current;
    if (opt.keep_history) history.push_back(current);
  }

  if (opt.keep_history) {
    std::reverse(history.begin(), history.end());
    grid.rows_ = std::move(history);
  } else {
    grid.rows_.push_back(std::move(later));
  }
  return grid;
}

/// Double-obstacle problem psi <= P <= psi + delta for the game put.
inline PdeGrid solve_game_vi(const ModelSpec& m, double x_min, double x_max,
                             int nx, int nt, const PdeOptions& opt = {}) {
  return solve_obstacle_problem(m, {x_min, x_max}, nx, nt, true, opt);
}

/// Single-obstacle problem P >= psi for the American put.
inline PdeGrid solve_american_vi(const ModelSpec& m, double x_min,
                                 double x_max, int nx, int nt,
                                 const PdeOptions& opt = {}) {
  return solve_obstacle_problem(m, {x_min, x_max}, nx, nt, false, opt);
}

/// Bilinear interpolation; exact at grid points. Needs the full history
/// unless t = 0.
inline double sample(const PdeGrid& g, double t, double x) {
  const double T = g.model().maturity();
  if (!(t >= 0.0 && t <= T && x >= g.x_min() && x <= g.x_max()))
    throw ConfigError("sample point outside the grid");
  // Coordinates within 1e-9 cells of a node snap to it, so grid points are
  // returned exactly despite rounding in (x - x_min) / dx.
  auto snap = [](double f) {
    const double r = std::round(f);
    return std::abs(f - r) < 1e-9 ? r : f;
  };
  const double fi = snap((x - g.x_min()) / g.dx());
  const int i = std::min(static_cast<int>(std::floor(fi)), g.nx() - 2);
  const double wx = fi - i;
  auto at_row = [&](int r) {
    const auto& row = g.row(r);
    return (1.0 - wx) * row[i] + wx * row[i + 1];
  };
  if (!g.has_history()) {
    if (t != 0.0) throw ConfigError("grid kept only the initial time row");
    return at_row(0);
  }
  const double fr = snap(t / g.dt());
  const int r = std::min(static_cast<int>(std::floor(fr)), g.nt() - 1);
  const double wt = fr - r;
  return (1.0 - wt) * at_row(r) + wt * at_row(r + 1);
}

}  // namespace gameput

#endif  // GAMEPUT_PDE_ORACLE_HPP
