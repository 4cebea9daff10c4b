#pragma once

#include <string_view>

namespace dpmarket {

/// Parametric families of epsilon-allocating functions.
///   Log:    f(c, p) = max(0, ln(e - c p)),  support bound (e - 1) / c
///   Linear: f(c, p) = max(0, 1 - c p),      support bound 1 / c
enum class Family { Log, Linear };

std::string_view to_string(Family family) noexcept;

/// Accepts "log" / "linear" (case-insensitive). Throws std::invalid_argument.
Family parse_family(std::string_view name);

/// One member f(c, .) of a family. Maps a reported unit price to the amount
/// of epsilon (in epsilon units) the consumer buys. Immutable.
class EpsilonAllocator {
public:
  /// Throws std::invalid_argument unless c is finite and positive.
  EpsilonAllocator(Family family, double c);

  Family family() const noexcept { return family_; }
  double c() const noexcept { return c_; }

  /// Largest price with f(c, p) > 0. f vanishes at and beyond this point.
  double support_bound() const noexcept { return support_bound_; }

  /// f(c, p), clamped at zero.
  double allocate(double price) const;

  /// Closed form of the tail integral of f from `price` to the support bound.
  double incentive(double price) const;

private:
  Family family_;
  double c_;
  double support_bound_;
};

/// Payment offered to a provider reporting `reported_price`.
struct Offer {
  double reported_price = 0.0;
  double epsilon_granted = 0.0;  // f(c, p)
  double base_payment = 0.0;     // p * f(c, p)
  double incentive = 0.0;        // tail integral of f from p
  double total = 0.0;            // base_payment + incentive
};

double allocate(const EpsilonAllocator& alloc, double price);

Offer payment_offer(const EpsilonAllocator& alloc, double price);

/// Provider surplus: offer at the reported price minus the true cost of the
/// epsilon sold. Maximized at reported == true_price.
double provider_utility(const EpsilonAllocator& alloc, double reported, double true_price);

}  // namespace dpmarket
