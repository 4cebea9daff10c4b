#include "dpmarket/provider.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>

namespace dpmarket {
namespace {

// Largest DP table we are willing to allocate (items x capacity cells).
constexpr std::size_t kMaxTableCells = std::size_t{1} << 28;

// Relative slack so that e.g. 0.7 / 0.1 = 7.0000000000000009 is still 7 units.
constexpr double kUnitSlack = 1e-9;

struct Item {
  const ConsumerQuote* quote;
  std::size_t weight;
};

struct Cell {
  double utility = 0.0;
  std::size_t weight = 0;
};

bool better(const Cell& a, const Cell& b) {
  if (a.utility != b.utility) return a.utility > b.utility;
  return a.weight < b.weight;
}

bool same(const Cell& a, const Cell& b) { return a.utility == b.utility && a.weight == b.weight; }

}  // namespace

void Provider::validate() const {
  if (!std::isfinite(true_price) || true_price < 0.0) {
    throw std::invalid_argument("provider " + id.str() + ": true price must be non-negative");
  }
  if (!std::isfinite(epsilon_total) || epsilon_total <= 0.0) {
    throw std::invalid_argument("provider " + id.str() + ": epsilon_total must be positive");
  }
  if (!std::isfinite(datum)) {
    throw std::invalid_argument("provider " + id.str() + ": datum must be finite");
  }
}

double report_price(const Provider& provider) { return provider.true_price; }

BudgetSplit split_privacy_budget(std::span<const ConsumerQuote> quotes, double epsilon_total,
                                 double unit) {
  if (!std::isfinite(unit) || unit <= 0.0) {
    throw std::invalid_argument("discretization unit must be finite and positive");
  }
  if (!std::isfinite(epsilon_total) || epsilon_total <= 0.0) {
    throw std::invalid_argument("epsilon_total must be finite and positive");
  }

  const auto capacity = static_cast<std::size_t>(std::floor(epsilon_total / unit + kUnitSlack));

  std::set<ConsumerId> seen;
  std::vector<Item> items;
  for (const auto& quote : quotes) {
    if (!std::isfinite(quote.utility) || quote.utility < 0.0) {
      throw std::invalid_argument("quote from " + quote.consumer_id.str() +
                                  " has negative or non-finite utility");
    }
    if (!std::isfinite(quote.epsilon_requested) || quote.epsilon_requested < 0.0) {
      throw std::invalid_argument("quote from " + quote.consumer_id.str() +
                                  " has negative or non-finite epsilon");
    }
    if (!seen.insert(quote.consumer_id).second) {
      throw std::invalid_argument("duplicate quote from " + quote.consumer_id.str());
    }
    if (quote.epsilon_requested == 0.0) continue;
    const double units = std::ceil(quote.epsilon_requested / unit - kUnitSlack);
    const auto weight = static_cast<std::size_t>(std::max(0.0, units));
    if (weight > capacity) continue;
    items.push_back({&quote, weight});
  }

  // Largest id first, so backtracking settles the smallest ids first.
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.quote->consumer_id > b.quote->consumer_id;
  });

  const std::size_t width = capacity + 1;
  if ((items.size() + 1) > kMaxTableCells / width) {
    throw std::invalid_argument("knapsack table too large; use a coarser unit");
  }

  // table[i * width + j]: best over the first i items within j weight units.
  std::vector<Cell> table((items.size() + 1) * width);
  for (std::size_t i = 1; i <= items.size(); ++i) {
    const Item& item = items[i - 1];
    for (std::size_t j = 0; j < width; ++j) {
      Cell best = table[(i - 1) * width + j];
      if (item.weight <= j) {
        const Cell& rest = table[(i - 1) * width + j - item.weight];
        const Cell with{rest.utility + item.quote->utility, rest.weight + item.weight};
        if (better(with, best)) best = with;
      }
      table[i * width + j] = best;
    }
  }

  BudgetSplit split;
  std::size_t j = capacity;
  for (std::size_t i = items.size(); i >= 1; --i) {
    const Item& item = items[i - 1];
    const Cell& here = table[i * width + j];
    bool take = false;
    if (item.weight <= j) {
      const Cell& rest = table[(i - 1) * width + j - item.weight];
      take = same(here, Cell{rest.utility + item.quote->utility, rest.weight + item.weight});
    }
    if (take) {
      split.selected.push_back(item.quote->consumer_id);
      split.utility += item.quote->utility;
      split.epsilon += item.quote->epsilon_requested;
      j -= item.weight;
    }
  }
  std::sort(split.selected.begin(), split.selected.end());
  return split;
}

}  // namespace dpmarket
