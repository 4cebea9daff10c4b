#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpmarket/allocation.hpp"
#include "dpmarket/market.hpp"

namespace dpmarket {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CSweep {
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;
};

struct ExperimentConfig {
  std::vector<std::size_t> n_providers{1000, 1500, 2000};
  std::size_t n_consumers = 10;
  double price_mean = 1.0;
  double price_std = 1.0;
  std::pair<double, double> price_clip{0.0, 2.0};
  double unit_value = 0.1;
  double provider_max_eps = 3.0;
  std::vector<double> budgets{60.0, 90.0, 120.0};
  double payoff_rate = 10.0;  // per epsilon unit
  std::vector<Family> families{Family::Log, Family::Linear};
  std::optional<CSweep> c_sweep;
  std::uint64_t seed = 1;
  // Fixed reported prices; replaces sampling (n_providers is then ignored).
  std::optional<std::vector<double>> prices;

  /// Throws ConfigError.
  void validate() const;
};

/// Reads the JSON form of ExperimentConfig. Unknown keys are rejected.
/// `n_providers` and `family` accept a scalar or a list. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// n draws from N(price_mean, price_std), clipped (not resampled) into
/// price_clip. Deterministic in (seed, n).
std::vector<double> sample_prices(const ExperimentConfig& config, std::size_t n);

struct ResultRow {
  Family family = Family::Linear;
  double budget = 0.0;
  std::size_t n = 0;
  double c = 0.0;
  double spend = 0.0;
  double information = 0.0;  // epsilon units
  double profit = 0.0;
  std::string flag;  // "solved", "argmax" or empty for plain sweep rows
};

struct CellReport {
  Family family = Family::Linear;
  double budget = 0.0;
  std::size_t n = 0;
  std::optional<double> solved_c;
  std::optional<double> argmax_c;  // sweep argmax, when swept
  std::optional<std::string> error;
  std::vector<std::string> violations;  // from audit_outcome
  std::size_t deals = 0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // ordered by (family, budget, n, c)
  std::vector<CellReport> cells;
};

/// Runs every (family, budget, n) cell: samples prices, runs one market round
/// with n_consumers identical consumers, audits the ledger, and optionally
/// sweeps c. Solver failures are recorded per cell.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Header `budget,n,family,c,spend,information,profit,flag`; floats use 9
/// significant digits.
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);

nlohmann::json to_json(const ExperimentResult& result);

/// Writes results.csv and summary.json into `dir`, creating it if needed.
void write_outputs(const std::filesystem::path& dir, const ExperimentResult& result);

/// Parses a numeric list separated by commas, whitespace or newlines. A
/// non-numeric first line is treated as a header. Throws ConfigError.
std::vector<double> parse_price_list(std::istream& in);

std::string format_number(double value);

}  // namespace dpmarket
