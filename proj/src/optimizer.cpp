#include "dpmarket/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dpmarket {
namespace {

SolvedAllocator make_solution(const BudgetProblem& problem, double c) {
  EpsilonAllocator alloc(problem.family, c);
  const double spent = spend_at(problem, c);
  return SolvedAllocator{alloc, spent, information_at(problem, c), spent - problem.budget};
}

double tolerance_for(const BudgetProblem& problem, const SolverOptions& options) {
  return options.relative_tolerance * std::max(1.0, problem.budget);
}

// Smallest c at which every positive price has left the support. Spend from
// zero-priced providers still decays like 1/c above this point.
double support_exhaustion_bound(const BudgetProblem& problem) {
  double min_positive = 0.0;
  for (double p : problem.reported_prices) {
    if (p > 0.0 && (min_positive == 0.0 || p < min_positive)) min_positive = p;
  }
  if (min_positive == 0.0) return 1.0;
  const double reach = problem.family == Family::Log ? std::numbers::e - 1.0 : 1.0;
  return reach / min_positive;
}

// spend_at is non-increasing in c, so the root of spend(c) = B is bracketed by
// shrinking lo until spend(lo) >= B and growing hi until spend(hi) <= B. The
// returned iterate always sits on the feasible (spend <= B) side.
SolvedAllocator bisect_budget(const BudgetProblem& problem, const SolverOptions& options) {
  const double budget = problem.budget;
  const double tol = tolerance_for(problem, options);

  double lo = options.initial_lower;
  int expansions = 0;
  while (spend_at(problem, lo) < budget) {
    if (++expansions > options.max_bracket_expansions || lo < 1e-300) {
      throw SolverError(SolverError::Kind::NoFeasibleRoot,
                        "budget exceeds the spend attainable as c -> 0");
    }
    lo *= 0.5;
  }

  double hi = std::max(lo * 2.0, support_exhaustion_bound(problem));
  expansions = 0;
  double spend_hi = spend_at(problem, hi);
  while (spend_hi > budget) {
    if (++expansions > options.max_bracket_expansions || !std::isfinite(hi * 2.0)) {
      throw SolverError(SolverError::Kind::NoFeasibleRoot,
                        "could not bracket the budget root from above");
    }
    lo = hi;
    hi *= 2.0;
    spend_hi = spend_at(problem, hi);
  }

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (budget - spend_hi <= tol) return make_solution(problem, hi);
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double spend_mid = spend_at(problem, mid);
    if (spend_mid > budget) {
      lo = mid;
    } else {
      hi = mid;
      spend_hi = spend_mid;
    }
  }
  if (budget - spend_hi <= tol) return make_solution(problem, hi);
  throw SolverError(SolverError::Kind::NonConvergence,
                    "bisection did not reach the budget tolerance", hi);
}

}  // namespace

void BudgetProblem::validate() const {
  if (reported_prices.empty()) {
    throw std::invalid_argument("budget problem needs at least one reported price");
  }
  if (!std::isfinite(budget) || budget <= 0.0) {
    throw std::invalid_argument("budget must be finite and positive");
  }
  for (double p : reported_prices) {
    if (!std::isfinite(p) || p < 0.0) {
      throw std::invalid_argument("reported prices must be finite and non-negative");
    }
  }
}

double spend_at(const BudgetProblem& problem, double c) {
  const EpsilonAllocator alloc(problem.family, c);
  double total = 0.0;
  for (double p : problem.reported_prices) total += payment_offer(alloc, p).total;
  return total;
}

double information_at(const BudgetProblem& problem, double c) {
  const EpsilonAllocator alloc(problem.family, c);
  double total = 0.0;
  for (double p : problem.reported_prices) total += alloc.allocate(p);
  return total;
}

SolvedAllocator solve_linear(const BudgetProblem& problem, const SolverOptions& options) {
  problem.validate();
  if (problem.family != Family::Linear) {
    throw std::invalid_argument("solve_linear requires the linear family");
  }
  const double n = static_cast<double>(problem.reported_prices.size());
  double sum_sq = 0.0;
  double max_price = 0.0;
  for (double p : problem.reported_prices) {
    sum_sq += p * p;
    max_price = std::max(max_price, p);
  }
  // Positive root of c^2 S + 2 B c - n = 0, written as n / (B + sqrt(B^2 + n S))
  // to avoid cancellation; reduces to n / (2B) when S = 0.
  const double b = problem.budget;
  const double c = n / (b + std::sqrt(b * b + n * sum_sq));
  if (max_price * c <= 1.0) {
    SolvedAllocator solved = make_solution(problem, c);
    if (std::abs(solved.residual) <= tolerance_for(problem, options)) return solved;
  }
  return bisect_budget(problem, options);
}

SolvedAllocator solve_log(const BudgetProblem& problem, const SolverOptions& options) {
  problem.validate();
  if (problem.family != Family::Log) {
    throw std::invalid_argument("solve_log requires the log family");
  }
  return bisect_budget(problem, options);
}

SolvedAllocator solve(const BudgetProblem& problem, const SolverOptions& options) {
  return problem.family == Family::Log ? solve_log(problem, options)
                                       : solve_linear(problem, options);
}

SolvedAllocator grid_oracle(const BudgetProblem& problem, double grid_step,
                            std::optional<double> c_max) {
  problem.validate();
  if (!std::isfinite(grid_step) || grid_step <= 0.0) {
    throw std::invalid_argument("grid step must be finite and positive");
  }
  double upper = 1.0;
  if (c_max) {
    upper = *c_max;
  } else {
    while (spend_at(problem, upper) > problem.budget && upper < 1e18) upper *= 2.0;
  }
  const auto steps = static_cast<long long>(std::ceil(upper / grid_step));

  std::optional<double> best_c;
  double best_info = -1.0;
  for (long long k = 1; k <= steps; ++k) {
    const double c = static_cast<double>(k) * grid_step;
    if (spend_at(problem, c) > problem.budget) continue;
    const double info = information_at(problem, c);
    if (info > best_info) {
      best_info = info;
      best_c = c;
    }
  }
  return make_solution(problem, best_c.value_or(static_cast<double>(steps) * grid_step));
}

double profit(const BudgetProblem& problem, const EpsilonAllocator& alloc, double payoff_rate) {
  if (!std::isfinite(payoff_rate) || payoff_rate <= 0.0) {
    throw std::invalid_argument("payoff rate must be finite and positive");
  }
  double information = 0.0;
  double spent = 0.0;
  for (double p : problem.reported_prices) {
    const Offer offer = payment_offer(alloc, p);
    information += offer.epsilon_granted;
    spent += offer.total;
  }
  return payoff_rate * information - spent;
}

}  // namespace dpmarket
