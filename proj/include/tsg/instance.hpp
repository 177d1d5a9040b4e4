#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tsg/distribution.hpp"
#include "tsg/errors.hpp"

namespace tsg {

using ItemId = std::int64_t;
using ItemSet = std::vector<ItemId>;

struct Item {
  ItemId id = 0;
  double cost = 1.0;
  ValueDistribution dist = ValueDistribution::deterministic(0.0);
};

/// k = floor(budget / cost), the number of copies of an item that fit the budget.
inline std::int64_t replication_count(double cost, double budget) {
  if (!(cost > 0.0)) throw InvalidParameterError("item cost must be positive");
  if (cost > budget) throw InfeasibleItemError("item cost exceeds the budget");
  return static_cast<std::int64_t>(std::floor(budget / cost));
}

inline std::int64_t replication_count(const Item& item, double budget) { return replication_count(item.cost, budget); }

/// Ground set plus budget. Items are validated on construction: positive
/// costs, unique ids, cost <= budget (exact comparison).
class Instance {
 public:
  Instance(std::vector<Item> items, double budget, std::uint64_t seed = 0)
      : items_(std::move(items)), budget_(budget), seed_(seed) {
    if (!(budget_ > 0.0) || !std::isfinite(budget_)) throw InvalidParameterError("budget must be positive and finite");
    index_.reserve(items_.size());
    k_.reserve(items_.size());
    for (std::size_t pos = 0; pos < items_.size(); ++pos) {
      const Item& it = items_[pos];
      if (!(it.cost > 0.0) || !std::isfinite(it.cost)) {
        throw InvalidParameterError("item " + std::to_string(it.id) + ": cost must be positive");
      }
      if (it.cost > budget_) {
        throw InfeasibleItemError("item " + std::to_string(it.id) + ": cost exceeds the budget");
      }
      if (!index_.emplace(it.id, pos).second) {
        throw InvalidParameterError("duplicate item id " + std::to_string(it.id));
      }
      k_.push_back(replication_count(it.cost, budget_));
    }
  }

  const std::vector<Item>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  double budget() const noexcept { return budget_; }
  std::uint64_t seed() const noexcept { return seed_; }

  bool contains(ItemId id) const { return index_.count(id) != 0; }

  /// Position of an item in items(); throws UnknownItemError.
  std::size_t position(ItemId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownItemError("unknown item id " + std::to_string(id));
    return it->second;
  }

  const Item& item(ItemId id) const { return items_[position(id)]; }
  std::int64_t k(ItemId id) const { return k_[position(id)]; }
  std::int64_t k_at(std::size_t pos) const { return k_[pos]; }

  double cost_of(std::span<const ItemId> set) const {
    double total = 0.0;
    for (ItemId id : set) total += item(id).cost;
    return total;
  }

  bool feasible(std::span<const ItemId> set) const { return cost_of(set) <= budget_; }

  ItemSet ids() const {
    ItemSet out;
    out.reserve(items_.size());
    for (const auto& it : items_) out.push_back(it.id);
    return out;
  }

 private:
  std::vector<Item> items_;
  double budget_;
  std::uint64_t seed_;
  std::unordered_map<ItemId, std::size_t> index_;
  std::vector<std::int64_t> k_;
};

}  // namespace tsg
