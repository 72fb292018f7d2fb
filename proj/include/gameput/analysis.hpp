#ifndef GAMEPUT_ANALYSIS_HPP
#define GAMEPUT_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "gameput/american.hpp"
#include "gameput/binomial_engine.hpp"
#include "gameput/game_pricer.hpp"
#include "gameput/pde_oracle.hpp"

namespace gameput {

// ---------------------------------------------------------------------------
// Free boundaries

/// Sampled holder exercise boundary s(t) and b(t) = e^{s(t)}.
struct BoundaryCurve {
  std::vector<double> times;
  std::vector<LogPrice> levels;
  std::vector<double> prices;

  bool empty() const { return times.empty(); }
  std::size_t size() const { return times.size(); }

  void push(double t, LogPrice level) {
    times.push_back(t);
    levels.push_back(level);
    prices.push_back(level.spot());
  }

  /// s(t) by linear interpolation between samples, clamped at the ends.
  double level_at(double t) const {
    if (times.empty()) throw ConfigError("empty boundary curve");
    if (t <= times.front()) return levels.front().value;
    if (t >= times.back()) return levels.back().value;
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto hi = static_cast<std::size_t>(it - times.begin());
    const auto lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    return (1.0 - w) * levels[lo].value + w * levels[hi].value;
  }
};

inline constexpr double kBoundaryTolerance = 1e-9;

/// Per level, the highest node below ln K whose value is within 1e-9 K of the
/// payoff, or nothing when the level has no such node.
inline std::vector<std::optional<LogPrice>> holder_boundary_levels(
    const ValueSurface& surface) {
  const LatticeSpec& lat = surface.lattice();
  const double lnk = lat.model().log_strike();
  const double tol = kBoundaryTolerance * lat.model().strike();
  std::vector<std::optional<LogPrice>> out(
      static_cast<std::size_t>(lat.steps()) + 1);
  for (int j = 0; j <= lat.steps(); ++j) {
    const auto values = surface.level_values(j);
    for (int i = j; i >= 0; --i) {
      const int k = 2 * i - j;
      const LogPrice x = lat.node_logprice(j, k);
      if (!(x.value < lnk)) continue;
      if (values[i] - lat.payoff(j, k) <= tol) {
        out[j] = x;
        break;
      }
    }
  }
  return out;
}

/// Holder boundary of a lattice surface; levels with an empty stop set emit
/// no sample.
inline BoundaryCurve extract_holder_boundary(const ValueSurface& surface) {
  const auto levels = holder_boundary_levels(surface);
  BoundaryCurve curve;
  for (std::size_t j = 0; j < levels.size(); ++j)
    if (levels[j]) curve.push(surface.lattice().time(static_cast<int>(j)), *levels[j]);
  return curve;
}

/// Same extraction on a solved PDE grid; needs the full time history.
inline BoundaryCurve extract_holder_boundary(const PdeGrid& grid) {
  if (!grid.has_history()) throw ConfigError("grid kept no time history");
  const double lnk = grid.model().log_strike();
  const double tol = kBoundaryTolerance * grid.model().strike();
  BoundaryCurve curve;
  for (int r = 0; r <= grid.nt(); ++r) {
    const auto& row = grid.row(r);
    for (int i = grid.nx() - 1; i >= 0; --i) {
      if (!(grid.x(i) < lnk)) continue;
      if (row[i] - grid.lower()[i] <= tol) {
        curve.push(grid.t(r), LogPrice(grid.x(i)));
        break;
      }
    }
  }
  return curve;
}

struct WriterRegion {
  /// Latest time level carrying a cancellation flag; 0 when the region is empty.
  double beta_estimate = 0.0;
  std::vector<std::pair<int, int>> nodes;

  bool empty() const { return nodes.empty(); }
};

/// Nodes flagged WRITER_CANCEL on a Dynkin surface. A zero penalty makes the
/// two obstacles coincide; the region is then reported empty.
inline WriterRegion extract_writer_region(const ValueSurface& surface) {
  const LatticeSpec& lat = surface.lattice();
  WriterRegion region;
  if (lat.model().penalty() == 0.0) return region;
  for (int j = 0; j < lat.steps(); ++j) {
    const auto flags = surface.level_flags(j);
    for (int i = 0; i <= j; ++i) {
      if (flags[i] == RegionFlag::kWriterCancel) {
        region.nodes.emplace_back(j, 2 * i - j);
        region.beta_estimate = lat.time(j);
      }
    }
  }
  return region;
}

/// Largest distance of a writer node from ln K, in units of the level spacing
/// 2 kappa sqrt(h).
inline double writer_distance_in_cells(const ValueSurface& surface,
                                       const WriterRegion& region) {
  const LatticeSpec& lat = surface.lattice();
  const double cell = 2.0 * lat.model().kappa() * lat.sqrt_h();
  double worst = 0.0;
  for (const auto& [j, k] : region.nodes) {
    const double d =
        std::abs(lat.node_logprice(j, k).value - lat.model().log_strike());
    worst = std::max(worst, d / cell);
  }
  return worst;
}

/// Last time t such that P(s, ln K) sits on the upper obstacle for every grid
/// time s <= t, within `tol_fraction` K. Returns 0 when the obstacle is not
/// touched at t = 0.
inline double extract_writer_horizon(const PdeGrid& grid,
                                     double tol_fraction = 1e-9) {
  if (!grid.is_game()) return 0.0;
  if (!grid.has_history()) throw ConfigError("grid kept no time history");
  const double lnk = grid.model().log_strike();
  const int ik = static_cast<int>(std::lround((lnk - grid.x_min()) / grid.dx()));
  const double tol = tol_fraction * grid.model().strike();
  double beta = 0.0;
  for (int r = 0; r < grid.nt(); ++r) {
    if (grid.value(r, ik) < grid.upper()[ik] - tol) break;
    beta = grid.t(r);
  }
  return beta;
}

// ---------------------------------------------------------------------------
// Region split around the holder boundary

enum class RegionTag { kC, kS, kB };

/// C strictly above s(t+h) + |mu| h + kappa sqrt(h), S at or below
/// s(t) - |mu| h - kappa sqrt(h), B in between. Every point gets one tag.
inline RegionTag classify_node_region(const ModelSpec& m,
                                      const BoundaryCurve& boundary, double h,
                                      double t, LogPrice x) {
  const double pad = std::abs(m.mu()) * h + m.kappa() * std::sqrt(h);
  const double drifted = m.mu() * t + x.value;
  if (drifted > boundary.level_at(t + h) + pad) return RegionTag::kC;
  if (drifted <= boundary.level_at(t) - pad) return RegionTag::kS;
  return RegionTag::kB;
}

// ---------------------------------------------------------------------------
// Boundary Hölder inequality

struct HolderCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// (s(t1) - s(t2))^2 against sup over grid x in [x0, x1] of
/// |P(t1, x) - P(t2, x)|. Times must lie in [0, beta] with beta read off the
/// grid's writer horizon.
inline HolderCheck holder_check(const PdeGrid& grid,
                                const BoundaryCurve& boundary, double t1,
                                double t2, double x0, double x1) {
  const double beta = extract_writer_horizon(grid);
  if (!(t1 >= 0.0 && t1 <= t2 && t2 <= beta + 1e-12))
    throw ConfigError("holder check times must satisfy 0 <= t1 <= t2 <= beta");
  const double ds = boundary.level_at(t1) - boundary.level_at(t2);
  HolderCheck out;
  out.lhs = ds * ds;
  const int i0 = std::max(0, static_cast<int>(std::floor((x0 - grid.x_min()) / grid.dx())));
  const int i1 = std::min(grid.nx() - 1,
                          static_cast<int>(std::ceil((x1 - grid.x_min()) / grid.dx())));
  for (int i = i0; i <= i1; ++i) {
    const double x = std::clamp(grid.x(i), x0, x1);
    out.rhs = std::max(out.rhs, std::abs(sample(grid, t1, x) - sample(grid, t2, x)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference values and error studies

/// PDE reference at one point together with its mesh-refinement evidence.
/// Only reference_value() and exact() produce one.
class ReferenceValue {
public:
  double value() const { return value_; }
  double coarse() const { return coarse_; }
  /// Estimated error of value(), never below double-precision resolution.
  double mesh_error() const { return mesh_error_; }
  bool converged() const { return converged_; }
  int nx() const { return nx_; }
  int nt() const { return nt_; }

  /// A value known exactly, e.g. a lattice price compared with itself.
  static ReferenceValue exact(double value) {
    ReferenceValue r;
    r.value_ = r.coarse_ = value;
    r.converged_ = true;
    return r;
  }

private:
  friend ReferenceValue reference_value(const ModelSpec&, LogPrice, int, int,
                                        double, const PdeOptions&);
  double value_ = 0.0;
  double coarse_ = 0.0;
  double mesh_error_ = 0.0;
  bool converged_ = false;
  int nx_ = 0;
  int nt_ = 0;
};

/// Solves the game problem at (nx, nt) and at twice the resolution
/// (2 nx - 1 points, 2 nt steps) and keeps the finer value. The pair must
/// agree within `agreement` for the reference to count as converged.
inline ReferenceValue reference_value(const ModelSpec& m, LogPrice x, int nx,
                                      int nt, double agreement = 1e-3,
                                      const PdeOptions& base = {}) {
  PdeOptions opt = base;
  opt.keep_history = false;
  const Domain dom = default_domain(m);
  const PdeGrid coarse = solve_obstacle_problem(m, dom, nx, nt, true, opt);
  const PdeGrid fine = solve_obstacle_problem(m, dom, 2 * nx - 1, 2 * nt, true, opt);
  ReferenceValue r;
  r.coarse_ = sample(coarse, 0.0, x.value);
  r.value_ = sample(fine, 0.0, x.value);
  const double gap = std::abs(r.value_ - r.coarse_);
  r.mesh_error_ = std::max(gap, 1e-12 * m.strike());
  r.converged_ = gap <= agreement;
  r.nx_ = 2 * nx - 1;
  r.nt_ = 2 * nt;
  return r;
}

struct Corridor {
  double lower_exponent;  // error >= -C n^lower_exponent
  double upper_exponent;  // error <= C n^upper_exponent
};

/// Error corridor for a variant and cutoff source.
inline Corridor corridor_for(Variant v, CurveMode mode) {
  if (v == Variant::kP1)
    return mode == CurveMode::kReference ? Corridor{-0.5, -0.75}
                                         : Corridor{-0.5, -2.0 / 3.0};
  return {-2.0 / 3.0, -0.5};
}

struct ErrorStudyReport {
  LogPrice x0;
  Variant variant = Variant::kP2;
  CurveMode mode = CurveMode::kReference;
  std::vector<int> ns;
  std::vector<double> cutoffs;
  std::vector<double> values;
  std::vector<double> errors;
  std::vector<bool> used_in_fit;
  double reference = 0.0;
  double noise_floor = 0.0;
  /// Least-squares slope of log|error| on log n; empty with fewer than two
  /// usable points.
  std::optional<double> fitted_rate;
  std::optional<double> fitted_constant;
  Corridor corridor{0.0, 0.0};
  double c_plus = 0.0;
  double c_minus = 0.0;
  int violations = 0;
  int validated = 0;
};

struct LogLogFit {
  double slope;
  double constant;
};

inline std::optional<LogLogFit> fit_loglog(const std::vector<int>& ns,
                                           const std::vector<double>& errors,
                                           const std::vector<bool>& use) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!use[i]) continue;
    const double lx = std::log(static_cast<double>(ns[i]));
    const double ly = std::log(std::abs(errors[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  if (count < 2) return std::nullopt;
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) return std::nullopt;
  const double slope = (count * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / count;
  return LogLogFit{slope, std::exp(intercept)};
}

/// Signed errors of P1 or P2 at x0 against a converged reference, each n with
/// its own cutoff. Entries below 10x the reference error (or exactly zero)
/// are left out of the rate fit. Corridor constants are fitted on the two
/// smallest n and validated on the rest.
inline ErrorStudyReport error_study(const ModelSpec& m, LogPrice x0,
                                    Variant variant, std::vector<int> ns,
                                    const ReferenceValue& reference,
                                    CurveMode mode = CurveMode::kReference) {
  if (!reference.converged())
    throw ConfigError("reference value is not mesh-converged");
  if (variant != Variant::kP1 && variant != Variant::kP2)
    throw ConfigError("error study supports p1 and p2 only");
  if (ns.empty()) throw ConfigError("empty list of step counts");
  for (std::size_t i = 1; i < ns.size(); ++i)
    if (ns[i] <= ns[i - 1]) throw ConfigError("step counts must increase");

  ErrorStudyReport rep;
  rep.x0 = x0;
  rep.variant = variant;
  rep.mode = mode;
  rep.ns = ns;
  rep.reference = reference.value();
  rep.noise_floor = 10.0 * reference.mesh_error();
  rep.corridor = corridor_for(variant, mode);

  PricingOptions opt;
  opt.keep_surface = false;
  for (const int n : ns) {
    const CutoffResult cut = compute_cutoff(m, n, mode);
    const double v = variant == Variant::kP1 ? price_p1(m, n, x0, cut.time, opt).value
                                             : price_p2(m, n, x0, cut.time, opt).value;
    rep.cutoffs.push_back(cut.time);
    rep.values.push_back(v);
    rep.errors.push_back(v - reference.value());
    rep.used_in_fit.push_back(rep.errors.back() != 0.0 &&
                              std::abs(rep.errors.back()) >= rep.noise_floor);
  }

  if (const auto fit = fit_loglog(rep.ns, rep.errors, rep.used_in_fit)) {
    rep.fitted_rate = fit->slope;
    rep.fitted_constant = fit->constant;
  }

  const std::size_t train = std::min<std::size_t>(2, ns.size());
  for (std::size_t i = 0; i < train; ++i) {
    const double n = ns[i];
    const double e = rep.errors[i];
    rep.c_plus = std::max(rep.c_plus, e / std::pow(n, rep.corridor.upper_exponent));
    rep.c_minus = std::max(rep.c_minus, -e / std::pow(n, rep.corridor.lower_exponent));
  }
  const double slack = reference.mesh_error();
  for (std::size_t i = train; i < ns.size(); ++i) {
    const double n = ns[i];
    const double e = rep.errors[i];
    ++rep.validated;
    if (e > rep.c_plus * std::pow(n, rep.corridor.upper_exponent) + slack ||
        e < -rep.c_minus * std::pow(n, rep.corridor.lower_exponent) - slack)
      ++rep.violations;
  }
  return rep;
}

}  // namespace gameput

#endif  // GAMEPUT_ANALYSIS_HPP
