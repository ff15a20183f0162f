// Command-line front end: validate a configuration, solve for the optimal
// sleep policy, simulate a solved policy, or sweep a grid of cost weights.

#include <iostream>

#include <CLI11.hpp>

#include "asmsleep/cli.hpp"

int main(int argc, char** argv) {
  using asmsleep::cli::ExitCode;
  asmsleep::cli::RunConfig rc;

  CLI::App app{"Advanced Sleep Mode policy solver and idle-period simulator"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", rc.config, "System configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", rc.out, "Output directory");
    cmd->add_option("--threads", rc.threads, "Worker threads (0: all cores)");
  };
  auto add_weights = [&](CLI::App* cmd) {
    cmd->add_option("--eps1", rc.eps1, "Delay weight");
    cmd->add_option("--eps2", rc.eps2, "Energy weight");
    cmd->add_option("--eps3", rc.eps3, "Switching weight");
  };
  auto add_sim = [&](CLI::App* cmd) {
    cmd->add_option("--seed", rc.seed, "Master seed");
    cmd->add_option("--periods", rc.periods, "Idle periods to simulate")
        ->check(CLI::PositiveNumber);
  };

  auto* validate = app.add_subcommand("validate", "Check a configuration and print it");
  add_common(validate);

  auto* solve = app.add_subcommand("solve", "Solve for the optimal policy");
  add_common(solve);
  add_weights(solve);

  auto* simulate = app.add_subcommand("simulate", "Simulate a solved policy");
  add_common(simulate);
  add_sim(simulate);
  simulate->add_option("--policy", rc.policy, "Policy file (default <out>/policy.json)");
  simulate->add_option("--trace-dump", rc.trace_dump,
                       "Write the first N idle-period traces to <out>/traces.jsonl");

  auto* sweep = app.add_subcommand("sweep", "Solve and simulate a grid of weights");
  add_common(sweep);
  add_sim(sweep);
  sweep->add_option("--grid", rc.grid,
                    "Axes like 'eps1=0.1:1.0:0.1;eps3=0' or 'eps1=0.7;eps3=0,0.1,0.2'")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }
  rc.command = app.get_subcommands().front()->get_name();
  return static_cast<int>(asmsleep::cli::run(rc, std::cout, std::cerr));
}
