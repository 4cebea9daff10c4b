#include "dpmarket/allocation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dpmarket {
namespace {

void require_price(double price, const char* what) {
  if (!std::isfinite(price) || price < 0.0) {
    throw std::invalid_argument(std::string(what) + " must be finite and non-negative, got " +
                                std::to_string(price));
  }
}

}  // namespace

std::string_view to_string(Family family) noexcept {
  switch (family) {
    case Family::Log:
      return "log";
    case Family::Linear:
      return "linear";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "log") return Family::Log;
  if (lower == "linear") return Family::Linear;
  throw std::invalid_argument("unknown allocator family '" + std::string(name) +
                              "' (expected log or linear)");
}

EpsilonAllocator::EpsilonAllocator(Family family, double c) : family_(family), c_(c) {
  if (!std::isfinite(c) || c <= 0.0) {
    throw std::invalid_argument("allocator parameter c must be finite and positive, got " +
                                std::to_string(c));
  }
  support_bound_ = family == Family::Log ? (std::numbers::e - 1.0) / c : 1.0 / c;
}

double EpsilonAllocator::allocate(double price) const {
  require_price(price, "price");
  if (price >= support_bound_) return 0.0;
  switch (family_) {
    case Family::Log:
      return std::max(0.0, std::log(std::numbers::e - c_ * price));
    case Family::Linear:
      return std::max(0.0, 1.0 - c_ * price);
  }
  return 0.0;
}

double EpsilonAllocator::incentive(double price) const {
  require_price(price, "price");
  if (price >= support_bound_) return 0.0;
  double value = 0.0;
  switch (family_) {
    case Family::Log: {
      // With u = e - c p = 1 + d:  (1/c) * (u ln u - u + 1).
      const double d = (std::numbers::e - 1.0) - c_ * price;
      value = ((1.0 + d) * std::log1p(d) - d) / c_;
      break;
    }
    case Family::Linear: {
      const double gap = 1.0 - c_ * price;
      value = gap * gap / (2.0 * c_);
      break;
    }
  }
  return std::max(0.0, value);
}

double allocate(const EpsilonAllocator& alloc, double price) { return alloc.allocate(price); }

Offer payment_offer(const EpsilonAllocator& alloc, double price) {
  Offer offer;
  offer.reported_price = price;
  offer.epsilon_granted = alloc.allocate(price);
  offer.base_payment = price * offer.epsilon_granted;
  offer.incentive = alloc.incentive(price);
  offer.total = offer.base_payment + offer.incentive;
  return offer;
}

double provider_utility(const EpsilonAllocator& alloc, double reported, double true_price) {
  require_price(true_price, "true price");
  const Offer offer = payment_offer(alloc, reported);
  return offer.total - true_price * offer.epsilon_granted;
}

}  // namespace dpmarket
