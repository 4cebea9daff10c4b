// Command-line driver for the data-market experiments.
//
//   dpmarket run   --config cfg.json [--out dir]
//   dpmarket sweep --family log --budget 60 --n 1000 --c-start 0.1 --c-stop 10 --c-step 0.01
//   dpmarket solve --family linear --budget 0.25 --prices prices.csv
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure (solve).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dpmarket/experiment.hpp"
#include "dpmarket/optimizer.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

void emit(const dpmarket::ExperimentResult& result, const std::string& out_dir) {
  if (out_dir.empty()) {
    dpmarket::write_csv(std::cout, result.rows);
  } else {
    dpmarket::write_outputs(out_dir, result);
  }
  for (const auto& cell : result.cells) {
    if (cell.error) {
      std::cerr << "warning: " << dpmarket::to_string(cell.family) << " B=" << cell.budget
                << " n=" << cell.n << ": " << *cell.error << '\n';
    }
    for (const auto& v : cell.violations) std::cerr << "ledger violation: " << v << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incentive-compatible differential-privacy data market simulator"};
  app.require_subcommand(1);

  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run a full experiment from a JSON config");
  std::string config_path;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Directory for results.csv and summary.json");

  auto* sweep = app.add_subcommand("sweep", "Sweep c for one (family, budget, n) cell");
  std::string sweep_family = "log";
  double sweep_budget = 60.0;
  std::size_t sweep_n = 1000;
  double c_start = 0.0, c_stop = 0.0, c_step = 0.0;
  std::uint64_t sweep_seed = 1;
  std::size_t sweep_consumers = 10;
  sweep->add_option("--family", sweep_family, "log or linear")->required();
  sweep->add_option("--budget", sweep_budget, "Consumer budget")->required();
  sweep->add_option("--n", sweep_n, "Number of providers")->required();
  sweep->add_option("--c-start", c_start)->required();
  sweep->add_option("--c-stop", c_stop)->required();
  sweep->add_option("--c-step", c_step)->required();
  sweep->add_option("--seed", sweep_seed, "Price sampling seed");
  sweep->add_option("--consumers", sweep_consumers, "Number of consumers in the market round");
  sweep->add_option("--out", out_dir, "Directory for results.csv and summary.json");

  auto* solve = app.add_subcommand("solve", "Solve the optimal c for a price list");
  std::string solve_family;
  double solve_budget = 0.0;
  std::string prices_path;
  solve->add_option("--family", solve_family, "log or linear")->required();
  solve->add_option("--budget", solve_budget, "Consumer budget")->required();
  solve->add_option("--prices", prices_path, "CSV file of reported prices")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) {
      emit(dpmarket::run_experiment(dpmarket::load_config(config_path)), out_dir);
      return 0;
    }
    if (*sweep) {
      dpmarket::ExperimentConfig config;
      config.families = {dpmarket::parse_family(sweep_family)};
      config.budgets = {sweep_budget};
      config.n_providers = {sweep_n};
      config.n_consumers = sweep_consumers;
      config.c_sweep = dpmarket::CSweep{c_start, c_stop, c_step};
      config.seed = sweep_seed;
      config.validate();
      emit(dpmarket::run_experiment(config), out_dir);
      return 0;
    }
    if (*solve) {
      std::ifstream in(prices_path);
      if (!in) throw dpmarket::ConfigError("cannot open price file " + prices_path);
      dpmarket::BudgetProblem problem{dpmarket::parse_family(solve_family),
                                      dpmarket::parse_price_list(in), solve_budget};
      problem.validate();
      try {
        const auto solved = dpmarket::solve(problem);
        std::cout << "c=" << dpmarket::format_number(solved.allocator.c())
                  << " spend=" << dpmarket::format_number(solved.spent)
                  << " information=" << dpmarket::format_number(solved.total_information)
                  << '\n';
        return 0;
      } catch (const dpmarket::SolverError& err) {
        std::cerr << "solver failure: " << err.what() << '\n';
        return kExitSolver;
      }
    }
  } catch (const dpmarket::ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
