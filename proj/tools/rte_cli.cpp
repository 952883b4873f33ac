// Command-line front end: rte <subcommand> --config FILE [options]
#include <CLI11.hpp>
#include <iostream>

#include "rte/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Transport forward solves and coefficient recovery"};
  app.set_version_flag("--version", std::string(rte::kVersion));
  std::string sub;
  rte::RunOptions opt;
  std::string out;
  int workers = 0;
  std::uint64_t seed = 0;
  app.add_option("subcommand", sub, "forward | recover-abs | recover-scat | nonlinear | verify")->required();
  app.add_option("--config,-c", opt.config_path, "experiment configuration (INI)")->required();
  auto* o_out = app.add_option("--out,-o", out, "output directory, overrides run.out");
  auto* o_workers = app.add_option("--workers,-j", workers, "worker threads")->check(CLI::PositiveNumber);
  auto* o_seed = app.add_option("--seed", seed, "seed, overrides run.seed");
  app.add_flag("--verbose,-v", opt.verbose, "print run details");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (o_out->count()) opt.out = out;
  if (o_workers->count()) opt.workers = workers;
  if (o_seed->count()) opt.seed = seed;

  rte::Subcommand cmd;
  try {
    cmd = rte::parse_subcommand(sub);
  } catch (const rte::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return rte::run(cmd, opt, std::cout);
}
