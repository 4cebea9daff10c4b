#include "dpmarket/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "dpmarket/optimizer.hpp"

namespace dpmarket {
namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "n_providers", "n_consumers", "price_mean",  "price_std", "price_clip", "unit_value",
    "provider_max_eps", "budgets", "payoff_rate", "family",   "c_sweep",    "seed",
    "prices"};

template <typename T>
T get_as(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception& err) {
    throw ConfigError("config field '" + key + "': " + err.what());
  }
}

template <typename T>
std::vector<T> scalar_or_list(const json& value, const std::string& key) {
  if (value.is_array()) return get_as<std::vector<T>>(value, key);
  return {get_as<T>(value, key)};
}

std::string provider_name(std::size_t index, std::size_t count) {
  const auto width = std::to_string(count).size();
  std::ostringstream os;
  os << 'u' << std::setw(static_cast<int>(width)) << std::setfill('0') << index;
  return os.str();
}

std::string consumer_name(std::size_t index, std::size_t count) {
  const auto width = std::to_string(count).size();
  std::ostringstream os;
  os << 'D' << std::setw(static_cast<int>(width)) << std::setfill('0') << index;
  return os.str();
}

void sweep_rows(const ExperimentConfig& config, const BudgetProblem& problem, CellReport& cell,
                std::vector<ResultRow>& rows) {
  const CSweep& sweep = *config.c_sweep;
  const auto count = static_cast<std::size_t>(std::floor((sweep.stop - sweep.start) / sweep.step + 1e-9));
  std::optional<std::size_t> best;
  double best_info = -1.0;
  for (std::size_t k = 0; k <= count; ++k) {
    const double c = sweep.start + static_cast<double>(k) * sweep.step;
    if (c <= 0.0) continue;
    const EpsilonAllocator alloc(problem.family, c);
    ResultRow row{problem.family, problem.budget, problem.reported_prices.size(), c,
                  spend_at(problem, c), information_at(problem, c),
                  profit(problem, alloc, config.payoff_rate), ""};
    if (row.spend <= problem.budget && row.information > best_info) {
      best_info = row.information;
      best = rows.size();
    }
    rows.push_back(std::move(row));
  }
  if (best) {
    rows[*best].flag = "argmax";
    cell.argmax_c = rows[*best].c;
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!prices && n_providers.empty()) throw ConfigError("n_providers must not be empty");
  for (auto n : n_providers) {
    if (n == 0) throw ConfigError("n_providers entries must be positive");
  }
  if (n_consumers == 0) throw ConfigError("n_consumers must be positive");
  if (!std::isfinite(price_mean)) throw ConfigError("price_mean must be finite");
  if (!std::isfinite(price_std) || price_std < 0.0) {
    throw ConfigError("price_std must be finite and non-negative");
  }
  if (!(price_clip.first <= price_clip.second) || price_clip.first < 0.0 ||
      !std::isfinite(price_clip.second)) {
    throw ConfigError("price_clip must be an ordered non-negative [low, high] pair");
  }
  if (!std::isfinite(unit_value) || unit_value <= 0.0) throw ConfigError("unit_value must be positive");
  if (!std::isfinite(provider_max_eps) || provider_max_eps <= 0.0) {
    throw ConfigError("provider_max_eps must be positive");
  }
  if (budgets.empty()) throw ConfigError("budgets must not be empty");
  for (double b : budgets) {
    if (!std::isfinite(b) || b <= 0.0) throw ConfigError("budgets must be positive");
  }
  if (!std::isfinite(payoff_rate) || payoff_rate <= 0.0) {
    throw ConfigError("payoff_rate must be positive");
  }
  if (families.empty()) throw ConfigError("family must name at least one family");
  if (c_sweep) {
    const CSweep& s = *c_sweep;
    if (!std::isfinite(s.step) || s.step <= 0.0) throw ConfigError("c_sweep step must be positive");
    if (!std::isfinite(s.start) || !std::isfinite(s.stop) || s.start > s.stop || s.stop <= 0.0) {
      throw ConfigError("c_sweep needs start <= stop and a positive stop");
    }
    if ((s.stop - s.start) / s.step > 1e8) throw ConfigError("c_sweep has too many points");
  }
  if (prices) {
    if (prices->empty()) throw ConfigError("prices must not be empty");
    for (double p : *prices) {
      if (!std::isfinite(p) || p < 0.0) throw ConfigError("prices must be non-negative");
    }
  }
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kKnownKeys.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  ExperimentConfig config;
  if (doc.contains("n_providers")) {
    config.n_providers = scalar_or_list<std::size_t>(doc["n_providers"], "n_providers");
  }
  if (doc.contains("n_consumers")) {
    config.n_consumers = get_as<std::size_t>(doc["n_consumers"], "n_consumers");
  }
  if (doc.contains("price_mean")) config.price_mean = get_as<double>(doc["price_mean"], "price_mean");
  if (doc.contains("price_std")) config.price_std = get_as<double>(doc["price_std"], "price_std");
  if (doc.contains("price_clip")) {
    const auto clip = get_as<std::vector<double>>(doc["price_clip"], "price_clip");
    if (clip.size() != 2) throw ConfigError("price_clip must have exactly two entries");
    config.price_clip = {clip[0], clip[1]};
  }
  if (doc.contains("unit_value")) config.unit_value = get_as<double>(doc["unit_value"], "unit_value");
  if (doc.contains("provider_max_eps")) {
    config.provider_max_eps = get_as<double>(doc["provider_max_eps"], "provider_max_eps");
  }
  if (doc.contains("budgets")) config.budgets = scalar_or_list<double>(doc["budgets"], "budgets");
  if (doc.contains("payoff_rate")) {
    config.payoff_rate = get_as<double>(doc["payoff_rate"], "payoff_rate");
  }
  if (doc.contains("family")) {
    config.families.clear();
    for (const auto& name : scalar_or_list<std::string>(doc["family"], "family")) {
      try {
        config.families.push_back(parse_family(name));
      } catch (const std::invalid_argument& err) {
        throw ConfigError(err.what());
      }
    }
  }
  if (doc.contains("c_sweep") && !doc["c_sweep"].is_null()) {
    const json& s = doc["c_sweep"];
    if (s.is_array()) {
      const auto v = get_as<std::vector<double>>(s, "c_sweep");
      if (v.size() != 3) throw ConfigError("c_sweep must be [start, stop, step]");
      config.c_sweep = CSweep{v[0], v[1], v[2]};
    } else if (s.is_object()) {
      config.c_sweep = CSweep{get_as<double>(s.value("start", json()), "c_sweep.start"),
                              get_as<double>(s.value("stop", json()), "c_sweep.stop"),
                              get_as<double>(s.value("step", json()), "c_sweep.step")};
    } else {
      throw ConfigError("c_sweep must be [start, stop, step] or {start, stop, step}");
    }
  }
  if (doc.contains("seed")) config.seed = get_as<std::uint64_t>(doc["seed"], "seed");
  if (doc.contains("prices") && !doc["prices"].is_null()) {
    config.prices = get_as<std::vector<double>>(doc["prices"], "prices");
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ConfigError("malformed config " + path.string() + ": " + err.what());
  }
  return parse_config(doc);
}

std::vector<double> sample_prices(const ExperimentConfig& config, std::size_t n) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(config.price_mean, config.price_std);
  const auto [low, high] = config.price_clip;
  std::vector<double> prices;
  prices.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double draw = config.price_std == 0.0 ? config.price_mean : normal(rng);
    prices.push_back(std::clamp(draw, low, high));
  }
  return prices;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;

  std::vector<std::size_t> sizes = config.n_providers;
  if (config.prices) sizes = {config.prices->size()};

  for (Family family : config.families) {
    for (double budget : config.budgets) {
      for (std::size_t n : sizes) {
        const std::vector<double> prices = config.prices ? *config.prices : sample_prices(config, n);

        std::vector<Provider> providers;
        providers.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
          providers.push_back({ProviderId(provider_name(i, n)), prices[i],
                               config.provider_max_eps, 0.0});
        }
        std::vector<Consumer> consumers;
        for (std::size_t j = 0; j < config.n_consumers; ++j) {
          consumers.push_back({ConsumerId(consumer_name(j, config.n_consumers)), budget,
                               config.payoff_rate, family, std::nullopt});
        }

        CellReport cell{family, budget, n, std::nullopt, std::nullopt, std::nullopt, {}, 0};
        std::vector<ResultRow> cell_rows;
        const MarketOutcome outcome = run_market(providers, consumers, config.unit_value);
        cell.violations = audit_outcome(outcome, providers, consumers);
        cell.deals = outcome.deals.size();

        double c_sum = 0.0, spend = 0.0, info = 0.0, profit_sum = 0.0;
        std::size_t solved = 0;
        for (const auto& [id, ledger] : outcome.per_consumer) {
          if (!ledger.solved) {
            if (!cell.error) cell.error = ledger.error.value_or("solver failure");
            continue;
          }
          ++solved;
          c_sum += ledger.solved->allocator.c();
          spend += ledger.spent;
          info += ledger.information;
          profit_sum += ledger.profit;
        }
        if (solved > 0) {
          const double k = static_cast<double>(solved);
          cell.solved_c = c_sum / k;
          cell_rows.push_back({family, budget, n, c_sum / k, spend / k, info / k, profit_sum / k,
                               "solved"});
        }
        if (config.c_sweep) {
          sweep_rows(config, BudgetProblem{family, prices, budget}, cell, cell_rows);
        }
        std::stable_sort(cell_rows.begin(), cell_rows.end(),
                         [](const ResultRow& a, const ResultRow& b) { return a.c < b.c; });
        result.rows.insert(result.rows.end(), cell_rows.begin(), cell_rows.end());
        result.cells.push_back(std::move(cell));
      }
    }
  }
  return result;
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "budget,n,family,c,spend,information,profit,flag\n";
  for (const auto& row : rows) {
    out << format_number(row.budget) << ',' << row.n << ',' << to_string(row.family) << ','
        << format_number(row.c) << ',' << format_number(row.spend) << ','
        << format_number(row.information) << ',' << format_number(row.profit) << ',' << row.flag
        << '\n';
  }
}

nlohmann::json to_json(const ExperimentResult& result) {
  // Numbers go through format_number so the JSON mirrors the CSV digits.
  auto num = [](double v) { return json::parse(format_number(v)); };
  json cells = json::array();
  for (const auto& cell : result.cells) {
    json entry{{"family", std::string(to_string(cell.family))},
               {"budget", num(cell.budget)},
               {"n", cell.n},
               {"deals", cell.deals},
               {"violations", cell.violations}};
    entry["solved_c"] = cell.solved_c ? num(*cell.solved_c) : json();
    entry["argmax_c"] = cell.argmax_c ? num(*cell.argmax_c) : json();
    entry["error"] = cell.error ? json(*cell.error) : json();
    cells.push_back(std::move(entry));
  }
  json rows = json::array();
  for (const auto& row : result.rows) {
    rows.push_back({{"budget", num(row.budget)},
                    {"n", row.n},
                    {"family", std::string(to_string(row.family))},
                    {"c", num(row.c)},
                    {"spend", num(row.spend)},
                    {"information", num(row.information)},
                    {"profit", num(row.profit)},
                    {"flag", row.flag}});
  }
  return json{{"cells", std::move(cells)}, {"rows", std::move(rows)}};
}

void write_outputs(const std::filesystem::path& dir, const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "results.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + (dir / "results.csv").string());
  write_csv(csv, result.rows);
  std::ofstream summary(dir / "summary.json", std::ios::binary);
  if (!summary) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
  summary << to_json(result).dump(2) << '\n';
}

std::vector<double> parse_price_list(std::istream& in) {
  std::vector<double> prices;
  std::string line;
  bool first_line = true;
  while (std::getline(in, line)) {
    for (char& ch : line) {
      if (ch == ',' || ch == ';' || ch == '\t' || ch == '\r') ch = ' ';
    }
    std::istringstream tokens(line);
    std::string token;
    bool header = false;
    std::vector<double> parsed;
    while (tokens >> token) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) {
        if (first_line) {
          header = true;
          break;
        }
        throw ConfigError("non-numeric price '" + token + "'");
      }
      if (!std::isfinite(value) || value < 0.0) {
        throw ConfigError("prices must be finite and non-negative, got '" + token + "'");
      }
      parsed.push_back(value);
    }
    if (!header) prices.insert(prices.end(), parsed.begin(), parsed.end());
    if (!line.empty()) first_line = false;
  }
  if (prices.empty()) throw ConfigError("price list is empty");
  return prices;
}

}  // namespace dpmarket
