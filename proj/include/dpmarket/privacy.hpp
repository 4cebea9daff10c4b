#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace dpmarket {

/// Laplace variate with the given scale from a uniform draw u in (-0.5, 0.5):
///   L = -scale * sign(u) * ln(1 - 2|u|)
double laplace_from_uniform(double u, double scale);

/// Uniform draw on the open interval (-0.5, 0.5) built from 53 random bits.
double centered_uniform(std::mt19937_64& rng);

/// value + Laplace(sensitivity / epsilon) noise, drawn from `rng`.
double laplace_release(double value, double sensitivity, double epsilon, std::mt19937_64& rng);

/// Single seeded release: the generator is seeded with `seed` and used once.
double laplace_release(double value, double sensitivity, double epsilon, std::uint64_t seed);

/// Sequential composition: releases at eps_1..eps_k are (sum eps_i)-DP.
double sequential_compose(std::span<const double> epsilons);

/// Parallel composition over disjoint data: (max eps_i)-DP.
double parallel_compose(std::span<const double> epsilons);

class BudgetExceeded : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Running sequential-composition total for one data owner. A release that
/// would push the total above the cap is rejected before any noise is drawn
/// and leaves the account untouched.
class PrivacyAccount {
public:
  explicit PrivacyAccount(double cap);

  double cap() const noexcept { return cap_; }
  double consumed() const noexcept { return consumed_; }
  double remaining() const noexcept { return cap_ - consumed_; }

  bool can_spend(double epsilon) const noexcept;

  /// Throws BudgetExceeded (no side effect) or std::invalid_argument.
  double release(double value, double sensitivity, double epsilon, std::uint64_t seed);

private:
  double cap_;
  double consumed_ = 0.0;
};

}  // namespace dpmarket
