#pragma once

// Set utility u(S) = E[g(X_S)]: exact enumeration for finite supports and
// Monte Carlo estimators over dedicated random streams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "tsg/distribution.hpp"
#include "tsg/errors.hpp"
#include "tsg/instance.hpp"
#include "tsg/rng.hpp"
#include "tsg/value_function.hpp"

namespace tsg {

inline constexpr double kDefaultEnumerationCap = 1e7;

struct UtilityEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Welford mean/variance accumulator.
class RunningStats {
 public:
  void push(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const noexcept { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }
  UtilityEstimate estimate() const noexcept { return {mean_, std_error()}; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Exact u(S). Modular g uses the closed form sum of means for any
/// distribution; otherwise every item must have finite support and the joint
/// support size must stay within `cap`.
inline double exact_utility(const Instance& inst, const ValueFunction& g, std::span<const ItemId> set,
                            double cap = kDefaultEnumerationCap) {
  if (g.is_modular()) {
    double total = 0.0;
    for (ItemId id : set) total += dist_mean(inst.item(id).dist);
    return total;
  }
  std::vector<std::vector<Atom>> supports;
  supports.reserve(set.size());
  double terms = 1.0;
  for (ItemId id : set) {
    auto atoms = finite_support(inst.item(id).dist);
    if (!atoms) throw CapacityError("exact utility needs finite supports (item " + std::to_string(id) + ")");
    terms *= static_cast<double>(atoms->size());
    if (terms > cap) throw CapacityError("exact utility enumeration exceeds the cap");
    supports.push_back(std::move(*atoms));
  }
  if (set.empty()) return g(std::span<const double>());

  std::vector<std::size_t> digit(supports.size(), 0);
  std::vector<double> x(supports.size());
  double total = 0.0;
  for (;;) {
    double prob = 1.0;
    for (std::size_t i = 0; i < supports.size(); ++i) {
      x[i] = supports[i][digit[i]].value;
      prob *= supports[i][digit[i]].probability;
    }
    total += prob * g(std::span<const double>(x));
    std::size_t pos = 0;
    while (pos < digit.size() && ++digit[pos] == supports[pos].size()) digit[pos++] = 0;
    if (pos == digit.size()) break;
  }
  return total;
}

/// Value oracle for sets. Solvers compare candidate sets through it; tests
/// plug in the exact oracle, experiments the Monte Carlo one.
class UtilityOracle {
 public:
  virtual ~UtilityOracle() = default;

  virtual UtilityEstimate value(std::span<const ItemId> set) = 0;

  /// u(S + item) - u(S).
  virtual UtilityEstimate marginal(std::span<const ItemId> set, ItemId item) = 0;
};

class ExactOracle final : public UtilityOracle {
 public:
  ExactOracle(const Instance& inst, ValueFunction g, double cap = kDefaultEnumerationCap)
      : inst_(&inst), g_(std::move(g)), cap_(cap) {}

  UtilityEstimate value(std::span<const ItemId> set) override {
    ItemSet key(set.begin(), set.end());
    std::sort(key.begin(), key.end());
    auto it = memo_.find(key);
    if (it != memo_.end()) return {it->second, 0.0};
    const double v = exact_utility(*inst_, g_, key, cap_);
    memo_.emplace(std::move(key), v);
    return {v, 0.0};
  }

  UtilityEstimate marginal(std::span<const ItemId> set, ItemId item) override {
    ItemSet with(set.begin(), set.end());
    with.push_back(item);
    return {value(with).value - value(set).value, 0.0};
  }

 private:
  const Instance* inst_;
  ValueFunction g_;
  double cap_;
  std::map<ItemSet, double> memo_;
};

/// Monte Carlo estimate over `reps` joint realizations. Realization j of item
/// i is the j-th draw of the stream (seed, i, purpose, substream). With
/// refresh = false every call reuses the same draws (common random numbers);
/// with refresh = true call number c uses substream c, so no draw is shared
/// between calls.
class MonteCarloOracle final : public UtilityOracle {
 public:
  MonteCarloOracle(const Instance& inst, ValueFunction g, std::size_t reps, std::uint64_t seed, Purpose purpose,
                   bool refresh = false)
      : inst_(&inst), g_(std::move(g)), reps_(reps), seed_(seed), purpose_(purpose), refresh_(refresh) {
    if (reps_ < 1) throw InvalidParameterError("Monte Carlo evaluation needs at least one realization");
  }

  UtilityEstimate value(std::span<const ItemId> set) override {
    const auto cols = columns(set, std::nullopt);
    return estimate(cols, cols.size());
  }

  UtilityEstimate marginal(std::span<const ItemId> set, ItemId item) override {
    const auto cols = columns(set, item);
    std::vector<double> xs;
    xs.reserve(cols.size());
    RunningStats stats;
    for (std::size_t j = 0; j < reps_; ++j) {
      xs.clear();
      for (std::size_t c = 0; c + 1 < cols.size(); ++c) xs.push_back((*cols[c])[j]);
      const double base = g_(std::span<const double>(xs));
      xs.push_back((*cols.back())[j]);
      stats.push(g_(std::span<const double>(xs)) - base);
    }
    return stats.estimate();
  }

  std::size_t reps() const noexcept { return reps_; }
  std::uint64_t calls() const noexcept { return calls_; }

 private:
  std::vector<const std::vector<double>*> columns(std::span<const ItemId> set, std::optional<ItemId> extra) {
    std::vector<const std::vector<double>*> cols;
    const std::uint64_t sub = refresh_ ? calls_ : 0;
    ++calls_;
    if (refresh_) fresh_.clear();
    auto fetch = [&](ItemId id) -> const std::vector<double>* {
      if (!refresh_) {
        auto it = cache_.find(id);
        if (it != cache_.end()) return &it->second;
      }
      RandomStream rng(seed_, static_cast<std::uint64_t>(id), purpose_, sub);
      auto draws = sample_values(inst_->item(id).dist, reps_, rng);
      if (refresh_) {
        fresh_.push_back(std::move(draws));
        return &fresh_.back();
      }
      return &cache_.emplace(id, std::move(draws)).first->second;
    };
    if (refresh_) fresh_.reserve(set.size() + 1);
    for (ItemId id : set) cols.push_back(fetch(id));
    if (extra) cols.push_back(fetch(*extra));
    return cols;
  }

  UtilityEstimate estimate(const std::vector<const std::vector<double>*>& cols, std::size_t used) {
    std::vector<double> xs;
    xs.reserve(used);
    RunningStats stats;
    for (std::size_t j = 0; j < reps_; ++j) {
      xs.clear();
      for (std::size_t c = 0; c < used; ++c) xs.push_back((*cols[c])[j]);
      stats.push(g_(std::span<const double>(xs)));
    }
    return stats.estimate();
  }

  const Instance* inst_;
  ValueFunction g_;
  std::size_t reps_;
  std::uint64_t seed_;
  Purpose purpose_;
  bool refresh_;
  std::uint64_t calls_ = 0;
  std::unordered_map<ItemId, std::vector<double>> cache_;
  std::vector<std::vector<double>> fresh_;
};

}  // namespace tsg
