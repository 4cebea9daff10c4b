#pragma once

#include <compare>
#include <ostream>
#include <string>
#include <utility>

namespace dpmarket {

// Opaque agent identifier. The tag keeps provider and consumer ids apart.
template <typename Tag>
class Id {
public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }

  friend auto operator<=>(const Id&, const Id&) = default;
  friend bool operator==(const Id&, const Id&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value_; }

private:
  std::string value_;
};

struct ProviderTag {};
struct ConsumerTag {};

using ProviderId = Id<ProviderTag>;
using ConsumerId = Id<ConsumerTag>;

}  // namespace dpmarket
