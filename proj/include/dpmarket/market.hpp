#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpmarket/allocation.hpp"
#include "dpmarket/ids.hpp"
#include "dpmarket/optimizer.hpp"
#include "dpmarket/provider.hpp"

namespace dpmarket {

struct Consumer {
  ConsumerId id;
  double budget = 1.0;
  double payoff_rate = 10.0;  // payoff per epsilon unit
  Family family = Family::Linear;
  // Skip the optimizer and publish f(forced_c, .). The planned spend at this
  // c must still fit the budget.
  std::optional<double> forced_c;

  void validate() const;
};

struct Deal {
  ProviderId provider_id;
  ConsumerId consumer_id;
  double epsilon = 0.0;        // absolute epsilon, units * unit_value
  double epsilon_units = 0.0;  // f(c, p)
  double payment = 0.0;        // mu(p)
  double provider_utility = 0.0;
  double consumer_profit_contrib = 0.0;  // payoff_rate * units - payment
};

struct ConsumerLedger {
  std::optional<SolvedAllocator> solved;
  std::optional<std::string> error;  // solver failure; the consumer trades nothing
  double spent = 0.0;
  double information = 0.0;  // epsilon units bought
  double profit = 0.0;
  std::size_t deals = 0;
};

struct ProviderLedger {
  double epsilon_consumed = 0.0;
  double utility = 0.0;
  double payments_received = 0.0;
  std::size_t deals = 0;
};

struct MarketOutcome {
  double unit_value = 0.1;
  std::vector<Deal> deals;  // grouped by provider in input order, consumers by id
  std::map<ConsumerId, ConsumerLedger> per_consumer;
  std::map<ProviderId, ProviderLedger> per_provider;
};

/// One trading round:
///   1. consumers announce their family and providers report prices,
///   2. each consumer solves c for its budget against the reported prices,
///   3. consumers quote epsilon = f(c, p) and the provider utility rho,
///   4. each provider splits its privacy budget over the quotes and confirms
///      the selected deals.
/// Deterministic in its inputs. Throws std::invalid_argument on empty or
/// invalid agent lists; solver failures are recorded per consumer.
MarketOutcome run_market(std::span<const Provider> providers, std::span<const Consumer> consumers,
                         double unit_value);

struct SanitizedRelease {
  ConsumerId consumer_id;
  ProviderId provider_id;
  double noisy_value = 0.0;
};

/// Releases every dealt datum through the Laplace mechanism at that deal's
/// epsilon, charging a per-provider privacy account capped at
/// epsilon_total + unit_value / 2. The noise seed depends only on
/// (seed, provider id, consumer id).
std::vector<SanitizedRelease> settle_and_sanitize(const MarketOutcome& outcome,
                                                  std::span<const Provider> providers,
                                                  std::uint64_t seed, double sensitivity = 1.0);

/// Seed used for the (provider, consumer) release.
std::uint64_t release_seed(std::uint64_t seed, const ProviderId& provider,
                           const ConsumerId& consumer);

/// Ledger conservation, budget safety and privacy safety checks. Returns one
/// message per violation; empty means the outcome is consistent.
std::vector<std::string> audit_outcome(const MarketOutcome& outcome,
                                       std::span<const Provider> providers,
                                       std::span<const Consumer> consumers);

}  // namespace dpmarket
