#include "tsinfer/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Parameter inference for time-series models"};
  app.set_version_flag("--version", TSINFER_VERSION);
  app.require_subcommand(1);

  std::string config;
  std::string method;
  long long iterations = -1;
  long long chains = -1;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir;
  bool quiet = false;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config, "INI config file")->required();
    cmd->add_option("--method", method, "method name, overrides [method] name");
    cmd->add_option("--iterations", iterations, "iteration budget")->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--workers", workers, "parallel evaluation threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_flag("--quiet", quiet, "suppress progress output");
  };
  auto* optimise = app.add_subcommand("optimise", "run an optimiser");
  add_common(optimise);
  auto* sample = app.add_subcommand("sample", "run an MCMC or nested sampler");
  add_common(sample);
  sample->add_option("--chains", chains, "number of MCMC chains")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tsinfer::cli::kExitConfigError;
  }

  tsinfer::cli::CliOptions options;
  options.quiet = quiet;
  for (auto* cmd : {optimise, sample}) {
    if (cmd->count("--method")) options.method = method;
    if (cmd->count("--iterations")) options.iterations = iterations;
    if (cmd->count("--seed")) options.seed = seed;
    if (cmd->count("--workers")) options.workers = workers;
    if (cmd->count("--out")) options.out_dir = out_dir;
  }
  if (sample->count("--chains")) options.chains = chains;

  if (*optimise) return tsinfer::cli::cmd_optimise(config, options, std::cout, std::cerr);
  return tsinfer::cli::cmd_sample(config, options, std::cout, std::cerr);
}
