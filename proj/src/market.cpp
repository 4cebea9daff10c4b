#include "dpmarket/market.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dpmarket/privacy.hpp"

namespace dpmarket {
namespace {

constexpr double kBudgetSlack = 1e-6;

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

struct Participant {
  const Consumer* consumer;
  std::optional<EpsilonAllocator> allocator;
};

void check_unique_ids(std::span<const Provider> providers, std::span<const Consumer> consumers) {
  std::set<ProviderId> provider_ids;
  for (const auto& p : providers) {
    if (!provider_ids.insert(p.id).second) {
      throw std::invalid_argument("duplicate provider id " + p.id.str());
    }
  }
  std::set<ConsumerId> consumer_ids;
  for (const auto& c : consumers) {
    if (!consumer_ids.insert(c.id).second) {
      throw std::invalid_argument("duplicate consumer id " + c.id.str());
    }
  }
}

template <typename... Args>
std::string message(const Args&... args) {
  std::ostringstream os;
  os.precision(12);
  (os << ... << args);
  return os.str();
}

}  // namespace

void Consumer::validate() const {
  if (!std::isfinite(budget) || budget <= 0.0) {
    throw std::invalid_argument("consumer " + id.str() + ": budget must be positive");
  }
  if (!std::isfinite(payoff_rate) || payoff_rate <= 0.0) {
    throw std::invalid_argument("consumer " + id.str() + ": payoff rate must be positive");
  }
  if (forced_c && (!std::isfinite(*forced_c) || *forced_c <= 0.0)) {
    throw std::invalid_argument("consumer " + id.str() + ": forced c must be positive");
  }
}

MarketOutcome run_market(std::span<const Provider> providers, std::span<const Consumer> consumers,
                         double unit_value) {
  if (providers.empty()) throw std::invalid_argument("market needs at least one provider");
  if (consumers.empty()) throw std::invalid_argument("market needs at least one consumer");
  if (!std::isfinite(unit_value) || unit_value <= 0.0) {
    throw std::invalid_argument("unit value must be finite and positive");
  }
  for (const auto& p : providers) p.validate();
  for (const auto& c : consumers) c.validate();
  check_unique_ids(providers, consumers);

  MarketOutcome outcome;
  outcome.unit_value = unit_value;

  // Reports are family-independent, so they can precede the consumers' solve.
  std::vector<double> reported;
  reported.reserve(providers.size());
  for (const auto& p : providers) reported.push_back(report_price(p));

  std::vector<Participant> participants;
  participants.reserve(consumers.size());
  for (const auto& consumer : consumers) {
    ConsumerLedger& ledger = outcome.per_consumer[consumer.id];
    Participant participant{&consumer, std::nullopt};
    const BudgetProblem problem{consumer.family, reported, consumer.budget};
    try {
      if (consumer.forced_c) {
        const EpsilonAllocator alloc(consumer.family, *consumer.forced_c);
        const double planned = spend_at(problem, alloc.c());
        if (planned > consumer.budget + kBudgetSlack) {
          throw std::invalid_argument(message("consumer ", consumer.id, ": forced c ", alloc.c(),
                                              " plans spend ", planned, " above budget ",
                                              consumer.budget));
        }
        ledger.solved = SolvedAllocator{alloc, planned, information_at(problem, alloc.c()),
                                        planned - consumer.budget};
      } else {
        ledger.solved = solve(problem);
      }
      participant.allocator = ledger.solved->allocator;
    } catch (const SolverError& err) {
      ledger.error = err.what();
    }
    participants.push_back(participant);
  }
  std::sort(participants.begin(), participants.end(), [](const auto& a, const auto& b) {
    return a.consumer->id < b.consumer->id;
  });

  for (std::size_t i = 0; i < providers.size(); ++i) {
    const Provider& provider = providers[i];
    const double price = reported[i];

    std::vector<ConsumerQuote> quotes;
    for (const auto& participant : participants) {
      if (!participant.allocator) continue;
      const double units = participant.allocator->allocate(price);
      if (units <= 0.0) continue;
      quotes.push_back({participant.consumer->id, units * unit_value,
                        provider_utility(*participant.allocator, price, provider.true_price)});
    }

    ProviderLedger& provider_ledger = outcome.per_provider[provider.id];
    if (quotes.empty()) continue;
    const BudgetSplit split = split_privacy_budget(quotes, provider.epsilon_total, unit_value);

    for (const auto& participant : participants) {
      const Consumer& consumer = *participant.consumer;
      if (!std::binary_search(split.selected.begin(), split.selected.end(), consumer.id)) continue;
      const Offer offer = payment_offer(*participant.allocator, price);
      Deal deal;
      deal.provider_id = provider.id;
      deal.consumer_id = consumer.id;
      deal.epsilon_units = offer.epsilon_granted;
      deal.epsilon = offer.epsilon_granted * unit_value;
      deal.payment = offer.total;
      deal.provider_utility = offer.total - provider.true_price * offer.epsilon_granted;
      deal.consumer_profit_contrib = consumer.payoff_rate * offer.epsilon_granted - offer.total;

      ConsumerLedger& ledger = outcome.per_consumer[consumer.id];
      ledger.spent += deal.payment;
      ledger.information += deal.epsilon_units;
      ledger.profit += deal.consumer_profit_contrib;
      ++ledger.deals;

      provider_ledger.epsilon_consumed += deal.epsilon;
      provider_ledger.utility += deal.provider_utility;
      provider_ledger.payments_received += deal.payment;
      ++provider_ledger.deals;

      outcome.deals.push_back(std::move(deal));
    }
  }
  return outcome;
}

std::uint64_t release_seed(std::uint64_t seed, const ProviderId& provider,
                           const ConsumerId& consumer) {
  const std::uint64_t p = fnv1a(provider.str());
  const std::uint64_t c = fnv1a(consumer.str());
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(p),    static_cast<std::uint32_t>(p >> 32),
                    static_cast<std::uint32_t>(c),    static_cast<std::uint32_t>(c >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::vector<SanitizedRelease> settle_and_sanitize(const MarketOutcome& outcome,
                                                  std::span<const Provider> providers,
                                                  std::uint64_t seed, double sensitivity) {
  std::map<ProviderId, const Provider*> by_id;
  for (const auto& p : providers) by_id[p.id] = &p;

  for (const auto& deal : outcome.deals) {
    if (!std::isfinite(deal.epsilon) || deal.epsilon <= 0.0) {
      throw std::invalid_argument(message("deal ", deal.provider_id, " -> ", deal.consumer_id,
                                          " has invalid epsilon ", deal.epsilon));
    }
    if (!by_id.contains(deal.provider_id)) {
      throw std::invalid_argument("deal references unknown provider " + deal.provider_id.str());
    }
  }

  std::map<ProviderId, PrivacyAccount> accounts;
  std::vector<SanitizedRelease> releases;
  releases.reserve(outcome.deals.size());
  for (const auto& deal : outcome.deals) {
    const Provider& provider = *by_id.at(deal.provider_id);
    auto [it, inserted] = accounts.try_emplace(
        provider.id, provider.epsilon_total + outcome.unit_value / 2.0);
    const double noisy = it->second.release(provider.datum, sensitivity, deal.epsilon,
                                            release_seed(seed, deal.provider_id, deal.consumer_id));
    releases.push_back({deal.consumer_id, deal.provider_id, noisy});
  }
  return releases;
}

std::vector<std::string> audit_outcome(const MarketOutcome& outcome,
                                       std::span<const Provider> providers,
                                       std::span<const Consumer> consumers) {
  std::vector<std::string> violations;
  const double tol = 1e-9;

  std::map<ConsumerId, double> consumer_paid;
  std::map<ConsumerId, double> consumer_units;
  std::map<ProviderId, double> provider_paid;
  std::map<ProviderId, double> provider_eps;
  double deal_total = 0.0;
  for (const auto& deal : outcome.deals) {
    consumer_paid[deal.consumer_id] += deal.payment;
    consumer_units[deal.consumer_id] += deal.epsilon_units;
    provider_paid[deal.provider_id] += deal.payment;
    provider_eps[deal.provider_id] += deal.epsilon;
    deal_total += deal.payment;
    if (deal.payment < 0.0 || deal.epsilon <= 0.0 || deal.provider_utility < -tol) {
      violations.push_back(message("deal ", deal.provider_id, " -> ", deal.consumer_id,
                                   " has negative payment, epsilon or utility"));
    }
  }

  double consumer_total = 0.0;
  for (const auto& consumer : consumers) {
    const auto it = outcome.per_consumer.find(consumer.id);
    if (it == outcome.per_consumer.end()) {
      violations.push_back("missing ledger for consumer " + consumer.id.str());
      continue;
    }
    const ConsumerLedger& ledger = it->second;
    consumer_total += ledger.spent;
    const double scale = std::max(1.0, ledger.spent);
    if (std::abs(ledger.spent - consumer_paid[consumer.id]) > tol * scale) {
      violations.push_back(message("consumer ", consumer.id, " spent ", ledger.spent,
                                   " but deals sum to ", consumer_paid[consumer.id]));
    }
    if (std::abs(ledger.information - consumer_units[consumer.id]) >
        tol * std::max(1.0, ledger.information)) {
      violations.push_back(message("consumer ", consumer.id, " information ", ledger.information,
                                   " but deals sum to ", consumer_units[consumer.id]));
    }
    if (ledger.spent > consumer.budget + kBudgetSlack) {
      violations.push_back(message("consumer ", consumer.id, " spent ", ledger.spent,
                                   " above budget ", consumer.budget));
    }
  }

  double provider_total = 0.0;
  for (const auto& provider : providers) {
    const auto it = outcome.per_provider.find(provider.id);
    if (it == outcome.per_provider.end()) {
      violations.push_back("missing ledger for provider " + provider.id.str());
      continue;
    }
    const ProviderLedger& ledger = it->second;
    provider_total += ledger.payments_received;
    if (std::abs(ledger.payments_received - provider_paid[provider.id]) >
        tol * std::max(1.0, ledger.payments_received)) {
      violations.push_back(message("provider ", provider.id, " received ",
                                   ledger.payments_received, " but deals sum to ",
                                   provider_paid[provider.id]));
    }
    if (std::abs(ledger.epsilon_consumed - provider_eps[provider.id]) > tol) {
      violations.push_back(message("provider ", provider.id, " epsilon ledger ",
                                   ledger.epsilon_consumed, " but deals sum to ",
                                   provider_eps[provider.id]));
    }
    if (ledger.epsilon_consumed > provider.epsilon_total + outcome.unit_value / 2.0) {
      violations.push_back(message("provider ", provider.id, " consumed epsilon ",
                                   ledger.epsilon_consumed, " above cap ",
                                   provider.epsilon_total));
    }
  }

  const double scale = std::max(1.0, deal_total);
  if (std::abs(consumer_total - deal_total) > tol * scale ||
      std::abs(provider_total - deal_total) > tol * scale) {
    violations.push_back(message("conservation: consumers paid ", consumer_total, ", deals total ",
                                 deal_total, ", providers received ", provider_total));
  }
  return violations;
}

}  // namespace dpmarket
