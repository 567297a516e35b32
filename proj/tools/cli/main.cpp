#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using nvsense::cli::Command;

  CLI::App app{"NV-ensemble vector magnetometry simulator", "nv-vecsense"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned workers = 1;

  const std::pair<Command, const char*> commands[] = {
      {Command::populations, "Closed-form vs master-equation populations per axis class"},
      {Command::sensitivity, "Shot-noise sensitivity report and optional t / omega_ac sweep"},
      {Command::estimate, "Simulated-shot reconstruction of (B_x, B_y, B_z)"},
      {Command::compensate, "Per-axis evolution times for inhomogeneous draws"},
      {Command::montecarlo, "Sensitivity ratio r(sigma') under inhomogeneity"},
  };
  std::vector<std::pair<Command, CLI::App*>> subs;
  for (const auto& [cmd, help] : commands) {
    CLI::App* sub = app.add_subcommand(std::string(nvsense::cli::to_string(cmd)), help);
    sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "RNG seed (overrides montecarlo.seed)");
    sub->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    subs.emplace_back(cmd, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nvsense::cli::exit_config;
  }

  for (const auto& [cmd, sub] : subs) {
    if (!sub->parsed()) continue;
    nvsense::cli::Overrides o;
    if (sub->count("--out")) o.out_dir = out_dir;
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--workers")) o.workers = workers;
    return nvsense::cli::run(cmd, config, o, std::cout, std::cerr);
  }
  return nvsense::cli::exit_config;
}
