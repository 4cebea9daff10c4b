// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Tolerances and thresholds are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dpmarket/allocation.hpp"
#include "dpmarket/experiment.hpp"
#include "dpmarket/market.hpp"
#include "dpmarket/optimizer.hpp"
#include "dpmarket/privacy.hpp"
#include "dpmarket/provider.hpp"
#include "oracles.hpp"

using namespace dpmarket;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (pass) detail << why;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Criterion 1: truthful reporting maximizes provider utility.
void truthfulness(Verdict& v) {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  long violations = 0;
  long checks = 0;
  for (Family family : {Family::Log, Family::Linear}) {
    for (int pair = 0; pair < 50; ++pair) {
      const double c = 0.1 + 9.9 * unit(rng);
      const EpsilonAllocator alloc(family, c);
      const double pi = alloc.support_bound() * unit(rng);
      const double truthful = provider_utility(alloc, pi, pi);
      for (int k = 0; k < 1000; ++k) {
        const double reported = 2.0 * alloc.support_bound() * unit(rng);
        ++checks;
        if (provider_utility(alloc, reported, pi) > truthful + 1e-9) ++violations;
      }
    }
  }
  const double elapsed = seconds_since(start);
  v.detail << checks << " reports, " << violations << " violations, " << elapsed << " s";
  if (violations != 0) v.fail("; utility exceeded truthful utility");
  if (elapsed >= 5.0) v.fail("; runtime >= 5 s");
}

std::vector<BudgetProblem> random_problems(Family family, std::mt19937_64& rng, int count) {
  std::uniform_int_distribution<int> n_dist(1, 50);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<BudgetProblem> problems;
  for (int i = 0; i < count; ++i) {
    auto prices = oracle::clipped_normal_prices(rng, static_cast<std::size_t>(n_dist(rng)));
    // Budgets between 0.1 and 1.0 per provider.
    const double budget = (0.1 + 0.9 * unit(rng)) * static_cast<double>(prices.size());
    problems.push_back({family, std::move(prices), budget});
  }
  return problems;
}

// Criterion 2: solver vs exhaustive grid search.
void oracle_equivalence(Verdict& v) {
  const auto start = Clock::now();
  std::mt19937_64 rng(202);
  const double step = 1e-4;
  double worst_gap = 0.0;
  double worst_residual = 0.0;
  int instances = 0;
  for (Family family : {Family::Log, Family::Linear}) {
    for (const auto& problem : random_problems(family, rng, 100)) {
      ++instances;
      const auto solved = solve(problem);
      const auto grid = grid_oracle(problem, step);
      const double gap = std::abs(solved.allocator.c() - grid.allocator.c());
      const double residual = std::abs(spend_at(problem, solved.allocator.c()) - problem.budget) /
                              std::max(1.0, problem.budget);
      worst_gap = std::max(worst_gap, gap);
      worst_residual = std::max(worst_residual, residual);
      if (gap > step) v.fail("; solver and grid disagree by more than one step");
      if (residual > 1e-6) v.fail("; budget residual above 1e-6 max(1,B)");
    }
  }
  const double elapsed = seconds_since(start);
  v.detail << instances << " instances, max |c - c_grid| = " << worst_gap
           << ", max relative residual = " << worst_residual << ", " << elapsed << " s";
  if (elapsed >= 30.0) v.fail("; runtime >= 30 s");
}

// Criterion 3: closed-form values.
void closed_forms(Verdict& v) {
  const double linear_c = solve_linear({Family::Linear, {1.0}, 0.25}).allocator.c();
  const double log_c = solve_log({Family::Log, {0.0}, 2.0}).allocator.c();
  v.detail.precision(12);
  v.detail << "linear c = " << linear_c << ", log c = " << log_c;
  if (std::abs(linear_c - 0.780776) > 1e-6) v.fail("; linear root off");
  if (std::abs(log_c - 0.5) > 1e-9) v.fail("; log root off");
}

// Grid argmax of `objective` over c = k * step, restricted to spend <= B.
// Ties go to the smaller c.
long grid_argmax(const BudgetProblem& problem, double step, long steps,
                 const std::function<double(double)>& objective) {
  long best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (long k = 1; k <= steps; ++k) {
    const double c = static_cast<double>(k) * step;
    if (spend_at(problem, c) > problem.budget) continue;
    const double value = objective(c);
    if (value > best_value) {
      best_value = value;
      best = k;
    }
  }
  return best;
}

// Criterion 4: information and profit pick the same grid cell.
void information_profit(Verdict& v) {
  std::mt19937_64 rng(404);
  const double step = 1e-3;
  const double rate = 10.0;
  int agree = 0;
  int total = 0;
  for (int i = 0; i < 50; ++i) {
    const Family family = i % 2 ? Family::Log : Family::Linear;
    const auto problem = random_problems(family, rng, 1).front();
    double upper = 1.0;
    while (spend_at(problem, upper) > problem.budget) upper *= 2.0;
    const long steps = static_cast<long>(std::ceil(4.0 * upper / step));
    const long by_info =
        grid_argmax(problem, step, steps, [&](double c) { return information_at(problem, c); });
    const long by_profit = grid_argmax(problem, step, steps, [&](double c) {
      return profit(problem, EpsilonAllocator(problem.family, c), rate);
    });
    ++total;
    if (by_info == by_profit) {
      ++agree;
    } else if (v.pass) {
      v.fail("");
      v.detail << "first disagreement: " << to_string(family) << " n=" << problem.reported_prices.size()
               << " B=" << problem.budget << " info c=" << by_info * step
               << " profit c=" << by_profit * step << "; ";
    }
  }
  v.detail << agree << "/" << total << " instances agree";
}

// Criterion 5: knapsack DP vs brute force.
void knapsack(Verdict& v) {
  const auto start = Clock::now();
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> m_dist(0, 15);
  std::uniform_real_distribution<double> eps_dist(0.0, 1.5);
  std::uniform_int_distribution<int> util_dist(0, 1024);
  std::uniform_real_distribution<double> total_dist(0.1, 3.0);
  int mismatches = 0;
  int infeasible = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = m_dist(rng);
    std::vector<oracle::Quote> raw;
    std::vector<ConsumerQuote> quotes;
    for (int i = 0; i < m; ++i) {
      // Dyadic utilities keep every subset sum exact in binary floating point.
      raw.push_back({"D" + std::to_string(i), eps_dist(rng), util_dist(rng) / 128.0});
      quotes.push_back({ConsumerId(raw.back().id), raw.back().epsilon, raw.back().utility});
    }
    const double total = total_dist(rng);
    const auto split = split_privacy_budget(quotes, total, 0.1);
    if (split.utility != oracle::knapsack_brute_force(raw, total, 0.1)) ++mismatches;
    if (split.epsilon > total + 0.05) ++infeasible;
  }
  const double elapsed = seconds_since(start);
  v.detail << "200 instances, " << mismatches << " mismatches, " << infeasible
           << " infeasible, " << elapsed << " s";
  if (mismatches || infeasible) v.fail("");
  if (elapsed >= 10.0) v.fail("; runtime >= 10 s");
}

// Criterion 6: Laplace variance and the two-point DP ratio.
void laplace_checks(Verdict& v) {
  for (double eps : {0.5, 1.0, 2.0}) {
    std::mt19937_64 rng(600 + static_cast<int>(eps * 10));
    const int n = 100000;
    std::vector<double> draws(n);
    double mean = 0.0;
    for (auto& d : draws) {
      d = laplace_release(0.0, 1.0, eps, rng);
      mean += d;
    }
    mean /= n;
    double var = 0.0;
    for (double d : draws) var += (d - mean) * (d - mean);
    var /= (n - 1);
    const double expected = 2.0 / (eps * eps);
    const double rel = std::abs(var - expected) / expected;
    v.detail << "var(eps=" << eps << ") rel err " << rel << "; ";
    if (rel > 0.05) v.fail("variance outside 5%; ");
  }

  const std::vector<double> edges{-4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0};
  for (double eps : {0.5, 1.0, 2.0}) {
    const int n = 1000000;
    std::vector<long> count0(edges.size() + 1, 0), count1(edges.size() + 1, 0);
    std::mt19937_64 rng0(700 + static_cast<int>(eps * 10));
    std::mt19937_64 rng1(800 + static_cast<int>(eps * 10));
    auto bin = [&](double x) {
      return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) -
                                      edges.begin());
    };
    for (int i = 0; i < n; ++i) {
      ++count0[bin(laplace_release(0.0, 1.0, eps, rng0))];
      ++count1[bin(laplace_release(1.0, 1.0, eps, rng1))];
    }
    double worst = 0.0;
    for (std::size_t b = 0; b < count0.size(); ++b) {
      const double q0 = static_cast<double>(count0[b]) / n;
      const double q1 = static_cast<double>(count1[b]) / n;
      if (count0[b] == 0 || count1[b] == 0) {
        v.fail("empty interval in ratio test; ");
        continue;
      }
      // Relative standard error of the ratio estimate.
      const double se = std::sqrt((1.0 - q0) / (n * q0) + (1.0 - q1) / (n * q1));
      const double bound = std::exp(eps) * (1.0 + 3.0 * se);
      const double ratio = std::max(q0 / q1, q1 / q0);
      worst = std::max(worst, ratio / std::exp(eps));
      if (ratio > bound) v.fail("ratio above e^eps (1 + 3 SE); ");
    }
    v.detail << "max ratio/e^eps(eps=" << eps << ") " << worst << "; ";
  }
}

std::vector<Provider> make_providers(const std::vector<double>& prices, double eps_total) {
  std::vector<Provider> providers;
  for (std::size_t i = 0; i < prices.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "u%05zu", i);
    providers.push_back({ProviderId(id), prices[i], eps_total, 0.0});
  }
  return providers;
}

// Criterion 7: full experiment rerun.
void experiment_rerun(Verdict& v) {
  const auto start = Clock::now();
  ExperimentConfig config;  // defaults: n 1000/1500/2000, 10 consumers, N(1,1) in [0,2]
  config.c_sweep = CSweep{0.01, 20.0, 0.01};
  config.seed = 2020;
  const auto result = run_experiment(config);
  const double elapsed = seconds_since(start);

  int violations = 0;
  for (const auto& cell : result.cells) {
    violations += static_cast<int>(cell.violations.size());
    if (cell.error) v.fail("; solver error in a cell");
    if (!cell.solved_c || !cell.argmax_c) {
      v.fail("; missing solved or argmax c");
      continue;
    }
    if (std::abs(*cell.solved_c - *cell.argmax_c) > config.c_sweep->step) {
      v.fail("; sweep argmax disagrees with solver");
    }
  }
  for (const auto& row : result.rows) {
    if (std::abs(row.profit - (config.payoff_rate * row.information - row.spend)) > 1e-6 ||
        row.spend > row.budget + 1e-6) {
      if (row.flag == "solved") v.fail("; inconsistent solved row");
    }
  }
  v.detail << result.cells.size() << " cells, " << violations << " ledger violations, "
           << elapsed << " s; solved c:";
  for (const auto& cell : result.cells) {
    if (cell.n == 1000 && cell.solved_c) {
      v.detail << ' ' << to_string(cell.family) << "@B=" << cell.budget << "=" << *cell.solved_c;
    }
  }
  if (violations) v.fail("; ledger invariants violated");
  if (result.cells.size() != 18) v.fail("; expected 18 cells");
  if (elapsed >= 60.0) v.fail("; runtime >= 60 s");
}

// Criterion 8: random market ledgers.
void ledger_suite(Verdict& v) {
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<int> n_prov(1, 200);
  std::uniform_int_distribution<int> n_cons(1, 10);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  std::size_t deals = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto prices = oracle::clipped_normal_prices(rng, static_cast<std::size_t>(n_prov(rng)));
    // Provider budgets from scarce (0.05) to ample (3.0).
    auto providers = make_providers(prices, 0.05);
    for (auto& p : providers) p.epsilon_total = 0.05 + 2.95 * unit(rng);
    std::vector<Consumer> consumers;
    const int m = n_cons(rng);
    for (int j = 0; j < m; ++j) {
      consumers.push_back({ConsumerId("D" + std::to_string(j)),
                           (0.05 + unit(rng)) * static_cast<double>(prices.size()),
                           1.0 + 19.0 * unit(rng), unit(rng) < 0.5 ? Family::Log : Family::Linear,
                           std::nullopt});
    }
    const auto outcome = run_market(providers, consumers, 0.1);
    deals += outcome.deals.size();
    const auto found = audit_outcome(outcome, providers, consumers);
    if (!found.empty() && v.pass) v.fail("first violation: " + found.front() + "; ");
    violations += static_cast<int>(found.size());
    settle_and_sanitize(outcome, providers, static_cast<std::uint64_t>(trial));
  }
  v.detail << "100 markets, " << deals << " deals, " << violations << " violations";
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    void (*run)(Verdict&);
  };
  const Criterion criteria[] = {
      {"1 truthfulness suite", truthfulness},
      {"2 optimizer/oracle equivalence", oracle_equivalence},
      {"3 closed-form checks", closed_forms},
      {"4 information/profit equivalence", information_profit},
      {"5 knapsack exactness", knapsack},
      {"6 laplace/dp checks", laplace_checks},
      {"7 end-to-end experiment rerun", experiment_rerun},
      {"8 ledger property suite", ledger_suite},
  };
  int failures = 0;
  for (const auto& criterion : criteria) {
    Verdict verdict;
    try {
      criterion.run(verdict);
    } catch (const std::exception& err) {
      verdict.fail(std::string("exception: ") + err.what());
    }
    failures += verdict.pass ? 0 : 1;
    std::printf("[%s] %s: %s\n", verdict.pass ? "PASS" : "FAIL", criterion.name,
                verdict.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures,
              std::size(criteria));
  return failures == 0 ? 0 : 1;
}
