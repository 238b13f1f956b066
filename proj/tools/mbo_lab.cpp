// mbo_lab: config-driven runner for thresholding experiments.
//
//   mbo_lab run <config> [--output-dir DIR] [--seed N] [--quiet]

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mbo/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"thresholding scheme experiments"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  std::string config;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool quiet = false;
  run->add_option("config", config, "config file (section.key = value)")->required()->check(CLI::ExistingFile);
  auto* out_opt = run->add_option("--output-dir", output_dir, "overrides run.output_dir");
  auto* seed_opt = run->add_option("--seed", seed, "overrides run.seed");
  run->add_flag("--quiet", quiet, "print only the final summary line");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : mbo::kExitConfig;
  }
  std::optional<std::string> od;
  std::optional<std::uint64_t> sd;
  if (*out_opt) od = output_dir;
  if (*seed_opt) sd = seed;
  return mbo::run_file(config, od, sd, quiet, std::cout, std::cerr);
}
