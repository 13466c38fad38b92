// pfsmc: simulate | sweep | bounds | verify <config> [--jobs N] [--out DIR] [--seed S]

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pfsmc/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sliding-mode control lab for the Caginalp phase-field system"};
  app.require_subcommand(1);

  std::string target;
  pfsmc::CommandOptions opt;
  std::uint64_t seed = 0;

  auto add = [&](const char* name, const char* help, const char* what) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", target, what)->required();
    sub->add_option("--jobs,-j", opt.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
    sub->add_option("--out,-o", opt.out, "output root (overrides PFSMC_OUT and output.dir)");
    sub->add_option("--seed", seed, "seed for randomized estimates (overrides the config)");
    return sub;
  };
  auto* simulate = add("simulate", "run pilot, bounds, controlled run and verdict", "config file");
  auto* sweep = add("sweep", "run every cell of the [sweep] grid", "config file");
  auto* bounds = add("bounds", "print the bounds report as JSON", "config file");
  auto* verify = add("verify", "recompute the verdict of a persisted run", "run directory or config file");

  CLI11_PARSE(app, argc, argv);
  for (auto* sub : {simulate, sweep, bounds, verify})
    if (sub->count("--seed")) opt.seed = seed;

  const std::filesystem::path path = target;
  if (*simulate) return pfsmc::cmd_simulate(path, opt, std::cout, std::cerr);
  if (*sweep) return pfsmc::cmd_sweep(path, opt, std::cout, std::cerr);
  if (*bounds) return pfsmc::cmd_bounds(path, opt, std::cout, std::cerr);
  return pfsmc::cmd_verify(path, opt, std::cout, std::cerr);
}
