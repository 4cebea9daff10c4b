#pragma once

#include <span>
#include <vector>

#include "dpmarket/ids.hpp"

namespace dpmarket {

struct Provider {
  ProviderId id;
  double true_price = 0.0;     // private unit price of epsilon
  double epsilon_total = 3.0;  // hard cap on cumulative epsilon across deals
  double datum = 0.0;          // raw value released under noise

  /// Throws std::invalid_argument on a negative price or non-positive budget.
  void validate() const;
};

/// What one consumer asks of a provider: epsilon at the provider's report,
/// and the utility the provider would earn from that deal.
struct ConsumerQuote {
  ConsumerId consumer_id;
  double epsilon_requested = 0.0;
  double utility = 0.0;
};

/// Truthful reporting is the dominant strategy under the incentive payment,
/// so the provider reveals its true price.
double report_price(const Provider& provider);

struct BudgetSplit {
  std::vector<ConsumerId> selected;  // sorted by id
  double utility = 0.0;
  double epsilon = 0.0;
};

/// 0/1 knapsack over the quotes: maximize total utility subject to
/// sum epsilon_requested <= epsilon_total.
///
/// Weights are discretized as ceil(epsilon / unit) and the capacity as
/// floor(epsilon_total / unit), so a selected set never exceeds the budget.
/// Quotes requesting zero epsilon are dropped. Among equal-utility sets the
/// one using fewer weight units wins, then the one containing the smallest
/// consumer id.
///
/// Throws std::invalid_argument for a non-positive unit or budget, a negative
/// or non-finite utility or epsilon, or duplicate consumer ids.
BudgetSplit split_privacy_budget(std::span<const ConsumerQuote> quotes, double epsilon_total,
                                 double unit);

}  // namespace dpmarket
