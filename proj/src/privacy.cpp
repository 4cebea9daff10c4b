#include "dpmarket/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dpmarket {
namespace {

void require_positive(double x, const char* what) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::invalid_argument(std::string(what) + " must be finite and positive");
  }
}

void require_epsilons(std::span<const double> epsilons) {
  if (epsilons.empty()) throw std::invalid_argument("composition needs at least one epsilon");
  for (double eps : epsilons) require_positive(eps, "epsilon");
}

// Absolute slack when comparing accumulated sums against the cap.
constexpr double kAccountSlack = 1e-12;

}  // namespace

double laplace_from_uniform(double u, double scale) {
  if (!(u > -0.5 && u < 0.5)) throw std::invalid_argument("uniform draw must lie in (-0.5, 0.5)");
  if (u == 0.0) return 0.0;
  const double magnitude = -scale * std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -magnitude : magnitude;
}

double centered_uniform(std::mt19937_64& rng) {
  for (;;) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    if (u > 0.0) return u - 0.5;
  }
}

double laplace_release(double value, double sensitivity, double epsilon, std::mt19937_64& rng) {
  require_positive(sensitivity, "sensitivity");
  require_positive(epsilon, "epsilon");
  return value + laplace_from_uniform(centered_uniform(rng), sensitivity / epsilon);
}

double laplace_release(double value, double sensitivity, double epsilon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return laplace_release(value, sensitivity, epsilon, rng);
}

double sequential_compose(std::span<const double> epsilons) {
  require_epsilons(epsilons);
  return std::accumulate(epsilons.begin(), epsilons.end(), 0.0);
}

double parallel_compose(std::span<const double> epsilons) {
  require_epsilons(epsilons);
  return *std::max_element(epsilons.begin(), epsilons.end());
}

PrivacyAccount::PrivacyAccount(double cap) : cap_(cap) { require_positive(cap, "privacy cap"); }

bool PrivacyAccount::can_spend(double epsilon) const noexcept {
  return std::isfinite(epsilon) && epsilon > 0.0 && consumed_ + epsilon <= cap_ + kAccountSlack;
}

double PrivacyAccount::release(double value, double sensitivity, double epsilon,
                               std::uint64_t seed) {
  require_positive(sensitivity, "sensitivity");
  require_positive(epsilon, "epsilon");
  if (!can_spend(epsilon)) {
    throw BudgetExceeded("release at epsilon " + std::to_string(epsilon) +
                         " would exceed the remaining budget " + std::to_string(remaining()));
  }
  const double noisy = laplace_release(value, sensitivity, epsilon, seed);
  consumed_ += epsilon;
  return noisy;
}

}  // namespace dpmarket
