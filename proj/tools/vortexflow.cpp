#include "vortexflow/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Signed-measure stochastic vortex dynamics"};
  app.set_version_flag("--version", std::string(vortexflow::kVersion));
  std::string command;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  app.add_option("command", command, "simulate | fixpoint | residual | continuity | contraction | "
                                     "counterexample | disproof | metrics")
      ->required();
  app.add_option("--config", config, "key = value config file")->required();
  app.add_option("--seed", seed, "override the master seed");
  app.add_option("--out", out, "override output.dir");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  return vortexflow::run_cli(command, config, seed, out, std::cerr);
}
