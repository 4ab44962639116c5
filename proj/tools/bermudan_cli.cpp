// Command-line runner for the built-in and user-defined pricing experiments.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bermudan/errors.hpp"
#include "bermudan/experiments.hpp"

namespace {

void print_summary(const std::vector<bermudan::ResultRow>& rows) {
  std::printf("%-18s %-52s %10s %9s %8s\n", "experiment", "regressor", "price", "stderr", "fit_s");
  for (const auto& row : rows) {
    if (row.error) {
      std::printf("%-18s %-52s %10s  error: %s\n", row.experiment.c_str(), row.regressor.c_str(), "-",
                  row.error->c_str());
      continue;
    }
    std::printf("%-18s %-52s %10.4f %9.4f %8.2f\n", row.experiment.c_str(), row.regressor.c_str(), row.price,
                row.std_error, row.fit_seconds);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bermudan option pricing with regression trees and random forests"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List the built-in experiments");

  auto* show = app.add_subcommand("show", "Print a built-in experiment as a JSON config");
  std::string show_id;
  show->add_option("id", show_id, "Experiment id")->required();

  auto* run = app.add_subcommand("run", "Run a config file or a built-in experiment");
  std::string config_path;
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  run->add_option("config", config_path, "JSON experiment config");
  run->add_option("--experiment,-e", experiment, "Built-in experiment id");
  run->add_option("--seed", seed, "Root seed");
  run->add_option("--paths", paths, "Paths for both fitting and resimulation");
  run->add_option("--workers", workers, "Sweep points fitted concurrently");
  run->add_option("--out", out, "CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (list->parsed()) {
      for (const auto& entry : bermudan::list_experiments()) {
        std::cout << entry.id << "\n  " << entry.description << "\n  compare: " << entry.reference << "\n";
      }
      return 0;
    }
    if (show->parsed()) {
      std::cout << bermudan::to_json(bermudan::builtin_experiment(show_id)).dump(2) << "\n";
      return 0;
    }

    if (config_path.empty() == experiment.empty()) {
      std::cerr << "run: give exactly one of <config> or --experiment\n";
      return 1;
    }
    bermudan::ExperimentConfig config =
        experiment.empty() ? bermudan::load_config(config_path) : bermudan::builtin_experiment(experiment);
    if (seed) config.seed = *seed;
    if (paths) config.fit_paths = config.resim_paths = *paths;
    if (workers) config.workers = *workers;
    if (out) config.output = *out;
    if (!experiment.empty() && config.output.empty()) config.output = experiment + ".csv";

    const auto rows = bermudan::run_experiment(config);
    print_summary(rows);
    if (!config.output.empty()) std::cout << "wrote " << config.output << "\n";
    for (const auto& row : rows) {
      if (row.error) return 2;
    }
    return 0;
  } catch (const bermudan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
