// raco: analytic evaluation, simulation, adaptive control and latency-outage
// measurement for random-access computation offloading.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "raco/commands.hpp"

namespace {

std::optional<std::uint64_t> seed_of(const CLI::Option* opt, std::uint64_t value) {
  if (opt->count() == 0) return std::nullopt;
  return value;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace raco::cli;
  CLI::App app{"Random-access computation offloading: analytics and simulation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;

  auto* analytic = app.add_subcommand("analytic", "closed-form summary of a scenario");
  analytic->add_option("config", config_path, "scenario config file")->required();

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo campaign, per-round CSV");
  simulate->add_option("config", sim_args.config_path, "scenario config file")->required();
  simulate->add_option("--rounds", sim_args.rounds, "number of rounds")->capture_default_str();
  auto* sim_seed = simulate->add_option("--seed", seed, "overrides the config seed");
  simulate->add_option("--out", sim_args.out, "CSV output path (default stdout)");
  simulate->add_flag("--work-conserving", sim_args.work_conserving, "let the offloading channel idle");

  AdaptArgs adapt_args;
  auto* adapt = app.add_subcommand("adapt", "campaign under a stochastic-approximation controller");
  adapt->add_option("config", adapt_args.config_path, "scenario config file")->required();
  adapt->add_option("--target", adapt_args.target, "umax | m")->check(CLI::IsMember({"umax", "m"}));
  adapt->add_option("--rounds", adapt_args.rounds, "number of rounds")->capture_default_str();
  double gain = 0.0;
  double kappa = 0.0;
  auto* gain_opt = adapt->add_option("--gain", gain, "step gain a");
  auto* kappa_opt = adapt->add_option("--kappa", kappa, "step exponent in (0.5, 1]");
  auto* adapt_seed = adapt->add_option("--seed", seed, "overrides the config seed");
  adapt->add_option("--out", adapt_args.out, "CSV output path (default stdout)");

  OutageArgs outage_args;
  std::string tau_grid;
  auto* outage = app.add_subcommand("outage", "empirical latency outage vs Chernoff bound");
  outage->add_option("config", outage_args.config_path, "scenario config file")->required();
  outage->add_option("--tau-grid", tau_grid, "comma-separated tau values in seconds")->required();
  outage->add_option("--rounds", outage_args.rounds, "number of rounds")->capture_default_str();
  outage->add_option("--n-max", outage_args.n_max, "series truncation for the MGF")->capture_default_str();
  auto* outage_seed = outage->add_option("--seed", seed, "overrides the config seed");
  outage->add_option("--out", outage_args.out, "CSV output path (default stdout)");

  std::string preset;
  std::string out_dir = ".";
  auto* reproduce = app.add_subcommand("reproduce", "run a figure preset");
  reproduce->add_option("preset", preset, "fig3a | fig3b | fig4a | fig4b | fig5a | fig5b | fig6 | fig7 | fig8")
      ->required();
  reproduce->add_option("--out", out_dir, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (analytic->parsed()) return cmd_analytic(config_path, std::cout, std::cerr);
  if (simulate->parsed()) {
    sim_args.seed = seed_of(sim_seed, seed);
    return cmd_simulate(sim_args, std::cout, std::cerr);
  }
  if (adapt->parsed()) {
    adapt_args.seed = seed_of(adapt_seed, seed);
    if (gain_opt->count() > 0) adapt_args.gain = gain;
    if (kappa_opt->count() > 0) adapt_args.kappa = kappa;
    return cmd_adapt(adapt_args, std::cout, std::cerr);
  }
  if (outage->parsed()) {
    outage_args.seed = seed_of(outage_seed, seed);
    try {
      outage_args.tau_grid = parse_real_list(tau_grid);
    } catch (const raco::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfigError;
    }
    return cmd_outage(outage_args, std::cout, std::cerr);
  }
  if (reproduce->parsed()) return cmd_reproduce(preset, out_dir, std::cout, std::cerr);
  return kFailure;
}
