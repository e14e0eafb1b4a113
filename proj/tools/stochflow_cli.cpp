#include <iostream>

#include <CLI11.hpp>

#include "stochflow/stochflow.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Backward-product analysis of stochastic matrix chains"};
  app.require_subcommand(1);
  stochflow::RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-i,--input", cfg.input_path, "Input spec (JSON)")
        ->required();
    sub->add_option("-o,--output", cfg.output_path,
                    "Write the report here instead of stdout");
    sub->add_option("--tol-zero", cfg.tol_zero,
                    "Entries at or below this count as exact zeros");
    sub->add_option("--tol-stoch", cfg.tol_stoch,
                    "Row/column sum tolerance");
  };

  CLI::App* analyze = app.add_subcommand(
      "analyze", "Flow and ergodicity report for a chain");
  add_common(analyze);
  analyze->add_option("--spread-log2", cfg.spread_log2,
                      "Row-spread horizon exponent for undecided verdicts");

  CLI::App* simulate =
      app.add_subcommand("simulate", "Trajectory CSV for a chain with x0");
  add_common(simulate);
  simulate->add_option("--horizon", cfg.horizon, "Number of steps");

  CLI::App* rate = app.add_subcommand(
      "rate", "Convergence-rate certificate for a doubly stochastic chain");
  add_common(rate);
  rate->add_option("--delta", cfg.delta, "Accumulation threshold in (0,1)");
  rate->add_option("--count", cfg.count, "Number of accumulation intervals");
  rate->add_option("--trace", cfg.trace_path, "Write a q,t,V CSV here");

  CLI::App* stability = app.add_subcommand(
      "stability", "Absolute asymptotic stability of a matrix collection");
  add_common(stability);
  stability->add_option("--witness", cfg.witness_path,
                        "Write an unstable switching witness spec here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  return stochflow::run_command(cfg, std::cout, std::cerr);
}
