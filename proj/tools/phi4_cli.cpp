// phi4: simulate, propagation, entropy, invariance, norms, checks.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "phi4/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Renormalised phi^4 on the 2D torus: simulation and checks"};
  app.require_subcommand(0, 1);
  bool print_schema = false;
  app.add_flag("--print-schema", print_schema, "list every config key with its default");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  phi4::RunContext ctx;
  std::string out_dir = "out";
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (key = value, [section] headers)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "RNG seed (overrides run.seed and PHI4_SEED)");
    sub->add_option("--replicas", ctx.replicas, "Monte Carlo replicas")->check(CLI::PositiveNumber);
    sub->add_flag("--quick", ctx.quick, "reduced replica counts");
    sub->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  };
  for (const char* name : {"simulate", "propagation", "entropy", "invariance", "norms"})
    common(app.add_subcommand(name, std::string("run the ") + name + " experiment"));
  CLI::App* checks = app.add_subcommand("checks", "run an acceptance suite");
  common(checks);
  checks->add_option("suite", ctx.suite, "gaussian, wick, norms, dynamics, entropy or all")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : phi4::exit_config;
  }
  if (print_schema) {
    std::cout << phi4::schema_text();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return phi4::exit_config;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  phi4::Config config;
  try {
    if (!config_path.empty()) config = phi4::Config::load(config_path);
  } catch (const phi4::ConfigError& e) {
    for (const auto& p : e.problems()) std::cerr << "config error: " << p << '\n';
    return phi4::exit_config;
  }
  ctx.seed = seed;
  ctx.out_dir = out_dir;
  return phi4::run_command(command, config, ctx, std::cout, std::cerr);
}
