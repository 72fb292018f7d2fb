#ifndef GAMEPUT_COMMANDS_HPP
#define GAMEPUT_COMMANDS_HPP

// Command implementations behind the gameput executable. Each command reads a
// resolved RunConfig and writes one CSV document to a stream; the executable
// only parses flags and maps exceptions to exit codes.

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gameput/american.hpp"
#include "gameput/analysis.hpp"
#include "gameput/csv.hpp"
#include "gameput/game_pricer.hpp"
#include "gameput/model.hpp"

namespace gameput::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

inline Variant parse_variant(const std::string& s) {
  if (s == "p1") return Variant::kP1;
  if (s == "p2") return Variant::kP2;
  if (s == "dynkin") return Variant::kDynkin;
  if (s == "american") return Variant::kAmerican;
  throw ConfigError("unknown variant '" + s + "'");
}

inline CurveMode parse_cutoff(const std::string& s) {
  if (s == "beta") return CurveMode::kReference;
  if (s == "gamma") return CurveMode::kBinomial;
  throw ConfigError("unknown cutoff '" + s + "'");
}

inline std::string_view to_string(CurveMode m) {
  return m == CurveMode::kReference ? "beta" : "gamma";
}

inline double parse_double(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("value for " + key + " is not a number: '" + s + "'");
  }
  if (used != s.size())
    throw ConfigError("value for " + key + " is not a number: '" + s + "'");
  return v;
}

inline int parse_int(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("value for " + key + " is not an integer: '" + s + "'");
  }
  if (used != s.size() || v < 1 || v > 1'000'000)
    throw ConfigError("value for " + key + " is not a valid count: '" + s + "'");
  return static_cast<int>(v);
}

inline std::vector<int> parse_int_list(const std::string& key,
                                       const std::string& s) {
  std::vector<int> out;
  for (const auto& field : split_fields(s)) {
    if (field.empty()) continue;
    out.push_back(parse_int(key, field));
  }
  return out;
}

/// Run parameters. Keys carry their units; the same keys are used in config
/// files and by the flag layer.
struct RunConfig {
  std::optional<double> strike;
  std::optional<double> rate_per_year;
  std::optional<double> volatility_per_sqrt_year;
  std::optional<double> maturity_years;
  std::optional<double> penalty;
  int steps = 2000;
  std::optional<double> spot;
  std::optional<double> logprice;
  Variant variant = Variant::kP2;
  CurveMode cutoff = CurveMode::kReference;
  std::vector<int> ns;
  int oracle_nx = 2049;
  int oracle_nt = 2048;
  std::string out;

  void set(const std::string& key, const std::string& value) {
    if (key == "strike") strike = parse_double(key, value);
    else if (key == "rate_per_year") rate_per_year = parse_double(key, value);
    else if (key == "volatility_per_sqrt_year")
      volatility_per_sqrt_year = parse_double(key, value);
    else if (key == "maturity_years") maturity_years = parse_double(key, value);
    else if (key == "penalty") penalty = parse_double(key, value);
    else if (key == "steps") steps = parse_int(key, value);
    else if (key == "spot") spot = parse_double(key, value);
    else if (key == "logprice") logprice = parse_double(key, value);
    else if (key == "variant") variant = parse_variant(value);
    else if (key == "cutoff") cutoff = parse_cutoff(value);
    else if (key == "ns") ns = parse_int_list(key, value);
    else if (key == "oracle_nx") oracle_nx = parse_int(key, value);
    else if (key == "oracle_nt") oracle_nt = parse_int(key, value);
    else if (key == "out") out = value;
    else throw ConfigError("unknown config key '" + key + "'");
  }

  ModelSpec model() const {
    auto need = [](const std::optional<double>& v, const char* name) {
      if (!v) throw ConfigError(std::string("missing ") + name);
      return *v;
    };
    const double k = need(strike, "strike");
    const double r = need(rate_per_year, "rate_per_year");
    const double vol = need(volatility_per_sqrt_year, "volatility_per_sqrt_year");
    const double t = need(maturity_years, "maturity_years");
    const double d = need(penalty, "penalty");
    return make_model(k, r, vol, t, d);
  }

  LogPrice x0() const {
    if (spot.has_value() == logprice.has_value())
      throw ConfigError("give exactly one of spot or logprice");
    if (spot) return LogPrice::of_spot(*spot);
    if (!std::isfinite(*logprice)) throw ConfigError("logprice must be finite");
    return LogPrice(*logprice);
  }

  /// Resolved settings in a fixed order, for reproducibility headers.
  std::vector<std::pair<std::string, std::string>> resolved() const {
    std::vector<std::pair<std::string, std::string>> out_kv;
    auto add = [&](const char* k, const std::optional<double>& v) {
      if (v) out_kv.emplace_back(k, format_number(*v));
    };
    add("strike", strike);
    add("rate_per_year", rate_per_year);
    add("volatility_per_sqrt_year", volatility_per_sqrt_year);
    add("maturity_years", maturity_years);
    add("penalty", penalty);
    out_kv.emplace_back("steps", format_number(steps));
    add("spot", spot);
    add("logprice", logprice);
    out_kv.emplace_back("variant", std::string(gameput::to_string(variant)));
    out_kv.emplace_back("cutoff", std::string(to_string(cutoff)));
    if (!ns.empty()) {
      std::string list;
      for (std::size_t i = 0; i < ns.size(); ++i)
        list += (i ? ";" : "") + std::to_string(ns[i]);
      out_kv.emplace_back("ns", list);
    }
    out_kv.emplace_back("oracle_nx", format_number(oracle_nx));
    out_kv.emplace_back("oracle_nt", format_number(oracle_nt));
    return out_kv;
  }
};

/// key=value lines; blank lines and lines starting with '#' are skipped.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(
    const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not key=value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

inline std::vector<std::pair<std::string, std::string>> load_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

namespace detail {

inline void write_header(CsvWriter& csv, const std::string& command,
                         const RunConfig& cfg) {
  csv.comment("gameput " + command);
  for (const auto& [k, v] : cfg.resolved()) csv.comment(k + "=" + v);
}

inline std::string price_or_empty(const std::optional<LogPrice>& x) {
  return x ? format_number(x->spot()) : std::string();
}

}  // namespace detail

/// One CSV row with the price of the configured variant.
inline void cmd_price(const RunConfig& cfg, std::ostream& out) {
  const ModelSpec m = cfg.model();
  const LogPrice x0 = cfg.x0();
  const int n = cfg.steps;
  const double dstar = delta_star(m);
  const CutoffResult cut = compute_cutoff(m, n, cfg.cutoff);

  PricingOptions opt;
  opt.keep_surface = false;
  double value = 0.0;
  switch (cfg.variant) {
    case Variant::kP1: value = price_p1(m, n, x0, cut.time, opt).value; break;
    case Variant::kP2: value = price_p2(m, n, x0, cut.time, opt).value; break;
    case Variant::kDynkin: value = price_dynkin(m, n, x0, opt).value; break;
    case Variant::kAmerican: value = american_put(m, n, x0); break;
  }

  CsvWriter csv(out);
  detail::write_header(csv, "price", cfg);
  csv.row({"variant", "n", "spot", "x0", "beta_or_gamma", "value", "delta_star",
           "regime"});
  csv.row({std::string(to_string(cfg.variant)), format_number(n),
           format_number(cfg.spot ? *cfg.spot : x0.spot()), format_number(x0.value),
           format_number(cut.time), format_number(value), format_number(dstar),
           m.penalty() >= dstar ? "AMERICAN_FALLBACK" : "GAME"});
}

/// Per-level holder boundaries of the Dynkin game and the American put, plus
/// whether the writer cancels anywhere on the level.
inline void cmd_boundary(const RunConfig& cfg, std::ostream& out) {
  const ModelSpec m = cfg.model();
  const LogPrice x0 = cfg.x0();
  const int n = cfg.steps;
  const auto game = price_dynkin(m, n, x0);
  const auto american = american_surface(m, n, x0);
  const auto game_levels = holder_boundary_levels(*game.surface);
  const auto am_levels = holder_boundary_levels(american);
  const auto writer = extract_writer_region(*game.surface);
  std::vector<bool> writer_level(static_cast<std::size_t>(n) + 1, false);
  for (const auto& node : writer.nodes) writer_level[node.first] = true;

  CsvWriter csv(out);
  detail::write_header(csv, "boundary", cfg);
  csv.row({"t", "b_game", "b_american", "writer_flag"});
  const LatticeSpec& lat = game.surface->lattice();
  for (int j = 0; j <= n; ++j) {
    csv.row({format_number(lat.time(j)), detail::price_or_empty(game_levels[j]),
             detail::price_or_empty(am_levels[j]),
             writer_level[j] ? "1" : "0"});
  }
}

/// Error study of P1 or P2 against a refined PDE reference.
inline void cmd_study(const RunConfig& cfg, std::ostream& out) {
  const ModelSpec m = cfg.model();
  const LogPrice x0 = cfg.x0();
  if (cfg.ns.empty()) throw ConfigError("study needs a list of step counts (ns)");
  if (cfg.variant != Variant::kP1 && cfg.variant != Variant::kP2)
    throw ConfigError("study supports variants p1 and p2");
  const ReferenceValue ref = reference_value(m, x0, cfg.oracle_nx, cfg.oracle_nt);
  if (!ref.converged())
    throw NumericalError("PDE reference refinement pair disagrees by " +
                         format_number(std::abs(ref.value() - ref.coarse())));
  const ErrorStudyReport rep = error_study(m, x0, cfg.variant, cfg.ns, ref, cfg.cutoff);

  CsvWriter csv(out);
  detail::write_header(csv, "study", cfg);
  csv.comment("reference=" + format_number(ref.value()) +
              " reference_coarse=" + format_number(ref.coarse()) +
              " noise_floor=" + format_number(rep.noise_floor));
  csv.comment("corridor_lower_exponent=" + format_number(rep.corridor.lower_exponent) +
              " corridor_upper_exponent=" + format_number(rep.corridor.upper_exponent) +
              " c_plus=" + format_number(rep.c_plus) +
              " c_minus=" + format_number(rep.c_minus));
  csv.row({"kind", "n", "beta_n", "value", "signed_error", "in_fit",
           "fitted_rate", "corridor_verdict"});
  for (std::size_t i = 0; i < rep.ns.size(); ++i) {
    csv.row({"point", format_number(rep.ns[i]), format_number(rep.cutoffs[i]),
             format_number(rep.values[i]), format_number(rep.errors[i]),
             rep.used_in_fit[i] ? "1" : "0", "", ""});
  }
  csv.row({"summary", "", "", "", "", "", format_optional(rep.fitted_rate),
           rep.violations == 0 ? "within" : "violated"});
}

/// Fixed parameter sets behind the three plot outputs.
inline RunConfig figure_config(int figure) {
  RunConfig cfg;
  cfg.strike = 20.0;
  cfg.rate_per_year = 0.02;
  cfg.volatility_per_sqrt_year = 0.15;
  cfg.maturity_years = figure == 2 ? 10.0 : 0.5;
  cfg.penalty = figure == 2 ? 1.0 : 0.15;
  cfg.spot = 20.0;
  cfg.steps = 2000;
  return cfg;
}

/// Plot data for figure 1 (game and American boundaries with the writer
/// band), figure 2 (prices against spot) or figure 3 (boundaries for several
/// penalties). `steps` overrides the lattice size when positive.
inline void cmd_figures(int figure, std::ostream& out, int steps = 0) {
  if (figure < 1 || figure > 3) throw ConfigError("figure must be 1, 2 or 3");
  RunConfig cfg = figure_config(figure);
  if (steps > 0) cfg.steps = steps;
  const int n = cfg.steps;
  const ModelSpec base = cfg.model();
  const LogPrice atm(base.log_strike());
  CsvWriter csv(out);

  if (figure == 1) {
    detail::write_header(csv, "figures 1", cfg);
    const auto game = price_dynkin(base, n, atm);
    const auto american = american_surface(base, n, atm);
    const auto g = holder_boundary_levels(*game.surface);
    const auto a = holder_boundary_levels(american);
    const auto writer = extract_writer_region(*game.surface);
    const LatticeSpec& lat = game.surface->lattice();
    std::vector<double> lo(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> hi(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<bool> any(static_cast<std::size_t>(n) + 1, false);
    for (const auto& [j, k] : writer.nodes) {
      const double s = lat.node_logprice(j, k).spot();
      lo[j] = any[j] ? std::min(lo[j], s) : s;
      hi[j] = any[j] ? std::max(hi[j], s) : s;
      any[j] = true;
    }
    csv.row({"t", "b_game", "writer_low", "writer_high", "b_american"});
    for (int j = 0; j <= n; ++j) {
      csv.row({format_number(lat.time(j)), detail::price_or_empty(g[j]),
               any[j] ? format_number(lo[j]) : "", any[j] ? format_number(hi[j]) : "",
               detail::price_or_empty(a[j])});
    }
    return;
  }

  if (figure == 3) {
    detail::write_header(csv, "figures 3", cfg);
    csv.comment("penalties=0.15;0.3;0.5");
    const auto american = american_surface(base, n, atm);
    std::vector<std::vector<std::optional<LogPrice>>> cols;
    cols.push_back(holder_boundary_levels(american));
    for (const double d : {0.15, 0.3, 0.5}) {
      const auto game = price_dynkin(base.with_penalty(d), n, atm);
      cols.push_back(holder_boundary_levels(*game.surface));
    }
    csv.row({"t", "b_american", "b_game_0.15", "b_game_0.3", "b_game_0.5"});
    const double h = base.maturity() / n;
    for (int j = 0; j <= n; ++j) {
      std::vector<std::string> row{format_number(j * h)};
      for (const auto& c : cols) row.push_back(detail::price_or_empty(c[j]));
      csv.row(row);
    }
    return;
  }

  // Figure 2: prices against spot, American and game at two penalties. The
  // game columns use the Dynkin lattice value; P2 columns are the strip
  // approximation with its reference cutoff.
  detail::write_header(csv, "figures 2", cfg);
  csv.comment("penalties=1;1.5 spot_grid=10:0.5:30");
  const AmericanCurve curve(base, n, CurveMode::kReference);
  const ModelSpec m1 = base.with_penalty(1.0);
  const ModelSpec m15 = base.with_penalty(1.5);
  const double s1 = compute_cutoff(m1, n, curve).time;
  const double s15 = compute_cutoff(m15, n, curve).time;
  csv.comment("cutoff_delta_1=" + format_number(s1) +
              " cutoff_delta_1.5=" + format_number(s15));
  csv.row({"spot", "american", "game_delta_1", "game_delta_1.5", "p2_delta_1",
           "p2_delta_1.5"});
  PricingOptions opt;
  opt.keep_surface = false;
  for (int i = 0; i <= 40; ++i) {
    const double spot = 10.0 + 0.5 * i;
    const LogPrice x = LogPrice::of_spot(spot);
    csv.row({format_number(spot), format_number(american_put(base, n, x)),
             format_number(price_dynkin(m1, n, x, opt).value),
             format_number(price_dynkin(m15, n, x, opt).value),
             format_number(price_p2(m1, n, x, s1, opt).value),
             format_number(price_p2(m15, n, x, s15, opt).value)});
  }
}

}  // namespace gameput::cli

#endif  // GAMEPUT_COMMANDS_HPP
