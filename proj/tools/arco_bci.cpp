// arco-bci simulate|train|query|benchmark --config <path> [--out <dir>] [--seed <int>] [--threads <n>]

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "arcobci/cli/commands.hpp"
#include "arcobci/cli/config.hpp"
#include "arcobci/error.hpp"

int main(int argc, char** argv) {
  using namespace arcobci;

  CLI::App app{"Bayesian causal inference with autoregressive order posteriors and GP mechanisms"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "draw ground-truth SCMs and observational data per seed"},
      {"train", "fit the order posterior to a data file and write a checkpoint"},
      {"query", "answer an edge, ESHD, intervention or ACE query from a checkpoint"},
      {"benchmark", "simulate, train and score every seed, then summarise"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value experiment file")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "single seed overriding the config list");
    sub->add_option("--threads", threads, "worker threads (ARCO_BCI_THREADS takes precedence)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    cli::RunConfig cfg = cli::load_run_config(config_path);
    if (out) cfg.out = *out;
    if (seed) cfg.seeds = {*seed};
    if (threads) cfg.engine.threads = *threads;
    cfg.engine.threads = resolve_threads(cfg.engine.threads);
    if (command == "simulate") return cli::cmd_simulate(cfg);
    if (command == "train") return cli::cmd_train(cfg);
    if (command == "query") return cli::cmd_query(cfg);
    return cli::cmd_benchmark(cfg);
  } catch (const Error& e) {
    std::cerr << "arco-bci " << command << ": " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "arco-bci " << command << ": " << e.what() << "\n";
    return 1;
  }
}
