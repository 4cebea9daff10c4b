#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpmarket/allocation.hpp"

namespace dpmarket {

/// A consumer's fixed-budget problem: pick c so that the offers to all
/// reporting providers exhaust the budget.
struct BudgetProblem {
  Family family = Family::Linear;
  std::vector<double> reported_prices;
  double budget = 1.0;

  /// Throws std::invalid_argument on an empty price list, a non-positive
  /// budget or a negative / non-finite price.
  void validate() const;
};

struct SolvedAllocator {
  EpsilonAllocator allocator;
  double spent = 0.0;              // sum of offers at the solved c
  double total_information = 0.0;  // sum of f(c, p_i), epsilon units
  double residual = 0.0;           // spent - budget
};

struct SolverOptions {
  double relative_tolerance = 1e-9;  // on |spent - budget| / max(1, budget)
  int max_iterations = 200;
  double initial_lower = 1e-9;
  int max_bracket_expansions = 200;
};

class SolverError : public std::runtime_error {
public:
  enum class Kind { NoFeasibleRoot, NonConvergence };

  SolverError(Kind kind, const std::string& message, std::optional<double> best_c = std::nullopt)
      : std::runtime_error(message), kind_(kind), best_c_(best_c) {}

  Kind kind() const noexcept { return kind_; }
  /// Best bisection iterate, populated for NonConvergence.
  std::optional<double> best_c() const noexcept { return best_c_; }

private:
  Kind kind_;
  std::optional<double> best_c_;
};

/// Sum of payment offers at parameter c. Offers clamp to zero outside the
/// support, so prices may straddle the support bound.
double spend_at(const BudgetProblem& problem, double c);

/// Total information I = sum of f(c, p_i) at parameter c.
double information_at(const BudgetProblem& problem, double c);

/// Quadratic root of c^2 * sum(p^2) + 2 B c - n = 0 when every price stays in
/// the support; otherwise bisection on the clamped spend.
SolvedAllocator solve_linear(const BudgetProblem& problem, const SolverOptions& options = {});

/// Bracketed bisection on sum_i max(0, p_i + (e/c) ln(e - c p_i) - (e-1)/c) = B.
SolvedAllocator solve_log(const BudgetProblem& problem, const SolverOptions& options = {});

/// Dispatches on problem.family.
SolvedAllocator solve(const BudgetProblem& problem, const SolverOptions& options = {});

/// Exhaustive scan of c = k * grid_step, k = 1..ceil(c_max / grid_step).
/// Returns the grid point with maximal information among those with
/// spend <= budget; ties go to the smaller c. When c_max is not given the
/// scan range is doubled from 1 until the spend fits the budget.
SolvedAllocator grid_oracle(const BudgetProblem& problem, double grid_step,
                            std::optional<double> c_max = std::nullopt);

/// payoff_rate * sum f(c, p_i) - sum mu(p_i), with the additive payoff
/// tau(eps) = payoff_rate * eps.
double profit(const BudgetProblem& problem, const EpsilonAllocator& alloc, double payoff_rate);

}  // namespace dpmarket
