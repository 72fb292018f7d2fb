// gameput: price game put options, extract free boundaries, run convergence
// studies and regenerate plot data. Output is CSV on stdout or --out.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "gameput/commands.hpp"

namespace {

using gameput::cli::RunConfig;

int report(const char* kind, const std::string& message, int code) {
  const nlohmann::json record{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << record.dump() << '\n';
  return code;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw gameput::ConfigError("cannot write '" + path + "'");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Game put option pricing on binomial lattices"};
  app.require_subcommand(1);

  // Flag values are kept as strings and applied on top of the config file
  // through the same key parser.
  std::map<std::string, std::string> flags;
  std::string config_path;
  int figure = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value config file");
    const std::pair<const char*, const char*> opts[] = {
        {"--strike", "strike"},
        {"--rate", "rate_per_year"},
        {"--vol", "volatility_per_sqrt_year"},
        {"--maturity", "maturity_years"},
        {"--penalty", "penalty"},
        {"--steps", "steps"},
        {"--spot", "spot"},
        {"--logprice", "logprice"},
        {"--variant", "variant"},
        {"--cutoff", "cutoff"},
        {"--ns", "ns"},
        {"--oracle-nx", "oracle_nx"},
        {"--oracle-nt", "oracle_nt"},
        {"--out", "out"},
    };
    for (const auto& [flag, key] : opts) {
      const std::string k = key;
      sub->add_option_function<std::string>(
          flag, [&flags, k](const std::string& v) { flags[k] = v; }, k);
    }
  };

  CLI::App* price = app.add_subcommand("price", "price one configuration");
  CLI::App* boundary = app.add_subcommand("boundary", "free boundaries per time level");
  CLI::App* study = app.add_subcommand("study", "error study against the PDE reference");
  CLI::App* figures = app.add_subcommand("figures", "plot data for figures 1-3");
  for (CLI::App* sub : {price, boundary, study}) add_common(sub);
  figures->add_option("--figure", figure, "figure id (1, 2 or 3)")->required();
  figures->add_option_function<std::string>(
      "--out", [&flags](const std::string& v) { flags["out"] = v; }, "output path");
  figures->add_option_function<std::string>(
      "--steps", [&flags](const std::string& v) { flags["steps"] = v; },
      "lattice steps (default 2000)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("config", e.what(), gameput::cli::kExitConfig);
  }

  try {
    RunConfig cfg;
    if (!config_path.empty())
      for (const auto& [k, v] : gameput::cli::load_config_file(config_path)) cfg.set(k, v);
    for (const auto& [k, v] : flags) cfg.set(k, v);

    std::ostringstream out;
    if (*price) gameput::cli::cmd_price(cfg, out);
    else if (*boundary) gameput::cli::cmd_boundary(cfg, out);
    else if (*study) gameput::cli::cmd_study(cfg, out);
    else
      gameput::cli::cmd_figures(figure, out, flags.count("steps") ? cfg.steps : 0);
    emit(cfg.out, out.str());
  } catch (const gameput::ConfigError& e) {
    return report("config", e.what(), gameput::cli::kExitConfig);
  } catch (const gameput::NumericalError& e) {
    return report("numerical", e.what(), gameput::cli::kExitNumerical);
  } catch (const std::exception& e) {
    return report("numerical", e.what(), gameput::cli::kExitNumerical);
  }
  return gameput::cli::kExitOk;
}
