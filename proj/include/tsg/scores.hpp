#pragma once

// Replication test scores r_i = E[g(X_i^(1), ..., X_i^(k_i))] with
// k_i = floor(B / c_i), their batch-mean estimates, and the sketch
// quantities (relative cost, min/max/average score, sandwich factors).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsg/distribution.hpp"
#include "tsg/errors.hpp"
#include "tsg/format.hpp"
#include "tsg/instance.hpp"
#include "tsg/parallel.hpp"
#include "tsg/rng.hpp"
#include "tsg/utility.hpp"
#include "tsg/value_function.hpp"

namespace tsg {

struct ScoreEntry {
  ItemId id = 0;
  double cost = 0.0;
  std::int64_t k = 1;
  std::int64_t m = 1;
  double r_hat = 0.0;
  bool degraded = false;
};

/// Per-item scores in instance order. `samples_per_item` is 0 for tables
/// holding exact scores.
class ScoreTable {
 public:
  ScoreTable() = default;

  ScoreTable(std::vector<ScoreEntry> entries, std::size_t samples_per_item, std::string value_fn)
      : entries_(std::move(entries)), samples_per_item_(samples_per_item), value_fn_(std::move(value_fn)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      if (e.k < 1 || e.m < 1) throw InvalidParameterError("score entries need k >= 1 and m >= 1");
      if (!(e.r_hat >= 0.0)) throw InvalidParameterError("score estimates must be >= 0");
      if (!index_.emplace(e.id, i).second) throw InvalidParameterError("duplicate item in score table");
    }
  }

  /// Table from externally supplied scores (exact or otherwise), m = 1.
  static ScoreTable from_scores(const Instance& inst, const std::function<double(ItemId)>& score,
                                std::string value_fn = {}) {
    std::vector<ScoreEntry> entries;
    entries.reserve(inst.size());
    for (std::size_t pos = 0; pos < inst.size(); ++pos) {
      const auto& it = inst.items()[pos];
      entries.push_back({it.id, it.cost, inst.k_at(pos), 1, score(it.id), false});
    }
    return ScoreTable(std::move(entries), 0, std::move(value_fn));
  }

  const std::vector<ScoreEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t samples_per_item() const noexcept { return samples_per_item_; }
  const std::string& value_fn() const noexcept { return value_fn_; }

  bool contains(ItemId id) const { return index_.count(id) != 0; }

  const ScoreEntry& entry(ItemId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownItemError("no score for item " + std::to_string(id));
    return entries_[it->second];
  }

  double score(ItemId id) const { return entry(id).r_hat; }

 private:
  std::vector<ScoreEntry> entries_;
  std::size_t samples_per_item_ = 0;
  std::string value_fn_;
  std::unordered_map<ItemId, std::size_t> index_;
};

/// Batch-mean estimate from `samples`, consumed in order: batch j is
/// samples[j*k, (j+1)*k). When k exceeds the sample count the samples are
/// cycled into a single batch and the result is flagged degraded.
inline ScoreEntry score_from_samples(const ValueFunction& g, std::span<const double> samples, std::int64_t k) {
  if (samples.empty()) throw InvalidParameterError("score estimation needs at least one sample");
  const std::size_t kk = static_cast<std::size_t>(k);
  ScoreEntry e;
  e.k = k;
  const std::size_t m = samples.size() / kk;
  if (m == 0) {
    std::vector<double> batch(kk);
    for (std::size_t i = 0; i < kk; ++i) batch[i] = samples[i % samples.size()];
    e.m = 1;
    e.r_hat = g(std::span<const double>(batch));
    e.degraded = true;
    return e;
  }
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) total += g(samples.subspan(j * kk, kk));
  e.m = static_cast<std::int64_t>(m);
  e.r_hat = total / static_cast<double>(m);
  return e;
}

/// Draws N values per item from the estimation stream (seed, id) and forms
/// batch-mean scores. Items are processed in parallel; results do not depend
/// on scheduling.
inline ScoreTable estimate_scores(const Instance& inst, const ValueFunction& g, std::size_t samples_per_item,
                                  std::uint64_t seed, std::size_t threads = 1) {
  if (samples_per_item < 1) throw InvalidParameterError("estimate_scores needs N >= 1");
  std::vector<ScoreEntry> entries(inst.size());
  parallel_for(
      inst.size(),
      [&](std::size_t pos) {
        const auto& it = inst.items()[pos];
        RandomStream rng(seed, static_cast<std::uint64_t>(it.id), Purpose::kEstimation);
        const auto samples = sample_values(it.dist, samples_per_item, rng);
        ScoreEntry e = score_from_samples(g, samples, inst.k_at(pos));
        e.id = it.id;
        e.cost = it.cost;
        entries[pos] = e;
      },
      threads);
  return ScoreTable(std::move(entries), samples_per_item, g.tag());
}

namespace detail {

// C(n, r) as a double, saturating at +inf.
inline double binomial_count(double n, double r) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0));
}

}  // namespace detail

/// Exact E[g] over k i.i.d. copies drawn from `dist`. Enumerates value
/// multisets with multinomial weights: C(k + s - 1, k) terms for s atoms.
inline double exact_replicated_value(const ValueFunction& g, const ValueDistribution& dist, std::int64_t k,
                                     double cap = kDefaultEnumerationCap) {
  if (k < 1) throw InvalidParameterError("k must be >= 1");
  if (g.is_modular()) return static_cast<double>(k) * dist_mean(dist);
  const auto atoms = finite_support(dist);
  if (!atoms) throw CapacityError("exact score needs a finite support or a modular value function");
  const std::size_t s = atoms->size();
  const double terms = detail::binomial_count(static_cast<double>(k + static_cast<std::int64_t>(s) - 1),
                                              static_cast<double>(k));
  if (terms > cap) throw CapacityError("exact score enumeration exceeds the cap");

  std::vector<double> log_p(s);
  for (std::size_t j = 0; j < s; ++j) log_p[j] = std::log((*atoms)[j].probability);
  const double log_kfact = std::lgamma(static_cast<double>(k) + 1.0);

  std::vector<std::int64_t> counts(s, 0);
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(k));
  double total = 0.0;

  // Depth-first over compositions counts[0] + ... + counts[s-1] = k.
  std::function<void(std::size_t, std::int64_t)> visit = [&](std::size_t j, std::int64_t left) {
    if (j + 1 == s) {
      counts[j] = left;
      double log_w = log_kfact;
      x.clear();
      for (std::size_t a = 0; a < s; ++a) {
        log_w -= std::lgamma(static_cast<double>(counts[a]) + 1.0);
        if (counts[a] > 0) log_w += static_cast<double>(counts[a]) * log_p[a];
        x.insert(x.end(), static_cast<std::size_t>(counts[a]), (*atoms)[a].value);
      }
      total += std::exp(log_w) * g(std::span<const double>(x));
      return;
    }
    for (std::int64_t c = 0; c <= left; ++c) {
      counts[j] = c;
      visit(j + 1, left - c);
    }
  };
  visit(0, k);
  return total;
}

inline double exact_score(const Item& item, const ValueFunction& g, double budget,
                          double cap = kDefaultEnumerationCap) {
  return exact_replicated_value(g, item.dist, replication_count(item, budget), cap);
}

inline ScoreTable exact_scores(const Instance& inst, const ValueFunction& g, double cap = kDefaultEnumerationCap) {
  return ScoreTable::from_scores(
      inst, [&](ItemId id) { return exact_score(inst.item(id), g, inst.budget(), cap); }, g.tag());
}

/// d(S) = sum over S of 1 / k_i.
inline double relative_cost(const Instance& inst, std::span<const ItemId> set) {
  double d = 0.0;
  for (ItemId id : set) d += 1.0 / static_cast<double>(inst.k(id));
  return d;
}

/// Lower factor 1 - e^{-d}.
inline double sketch_p(double d) { return -std::expm1(-d); }

/// Upper factor 1 + d + 2 sqrt(d).
inline double sketch_q(double d) { return 1.0 + d + 2.0 * std::sqrt(d); }

struct SketchReport {
  ItemSet set;
  double d = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;
  double v_avg = 0.0;
  double p_factor = 0.0;
  double q_factor = 0.0;
};

inline SketchReport score_sketch(const Instance& inst, const std::function<double(ItemId)>& score,
                                 std::span<const ItemId> set) {
  if (set.empty()) throw DomainError("sketch of an empty set");
  SketchReport r;
  r.set.assign(set.begin(), set.end());
  r.v_min = std::numeric_limits<double>::infinity();
  r.v_max = -std::numeric_limits<double>::infinity();
  double weighted = 0.0;
  for (ItemId id : set) {
    const double s = score(id);
    const double inv_k = 1.0 / static_cast<double>(inst.k(id));
    r.v_min = std::min(r.v_min, s);
    r.v_max = std::max(r.v_max, s);
    weighted += s * inv_k;
    r.d += inv_k;
  }
  r.v_avg = std::clamp(weighted / r.d, r.v_min, r.v_max);
  r.p_factor = sketch_p(r.d);
  r.q_factor = sketch_q(r.d);
  return r;
}

inline SketchReport score_sketch(const Instance& inst, const ScoreTable& scores, std::span<const ItemId> set) {
  return score_sketch(inst, [&scores](ItemId id) { return scores.score(id); }, set);
}

struct CurvatureFactors {
  double p_alpha;
  double q_alpha;  // +inf at alpha = 1
};

/// p_alpha = (1 - e^{-alpha d}) / alpha (-> d as alpha -> 0), q_alpha = d / (1 - alpha).
inline CurvatureFactors curvature_sketch_factors(double d, double alpha) {
  if (!(d >= 0.0)) throw InvalidParameterError("relative cost must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameterError("curvature must lie in [0, 1]");
  const double p = alpha < 1e-12 ? d : -std::expm1(-alpha * d) / alpha;
  const double q = alpha >= 1.0 ? std::numeric_limits<double>::infinity() : d / (1.0 - alpha);
  return {p, q};
}

struct SandwichOptions {
  std::size_t mc_reps = 100000;
  double se_multiplier = 3.0;
  // Samples per item for scores that cannot be computed exactly.
  std::size_t fallback_samples = 400000;
  std::function<double(double)> p_factor = sketch_p;
  std::function<double(double)> q_factor = sketch_q;
};

struct SandwichReport {
  double u_hat = 0.0;
  double std_error = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  SketchReport sketch;
  bool pass = false;
};

/// Checks p(d(S)) * min r_i <= u(S) <= q(d(S)) * max r_i with u(S)
/// estimated from `mc_reps` joint realizations. Scores are exact where
/// enumeration is possible, high-sample estimates otherwise.
inline SandwichReport verify_sandwich(const Instance& inst, const ValueFunction& g, std::span<const ItemId> set,
                                      std::uint64_t seed, const SandwichOptions& opt = {}) {
  if (set.empty()) throw DomainError("sandwich check needs a nonempty set");
  if (!inst.feasible(set)) throw DomainError("sandwich check needs a feasible set");

  auto score = [&](ItemId id) -> double {
    const Item& it = inst.item(id);
    try {
      return exact_score(it, g, inst.budget());
    } catch (const CapacityError&) {
      RandomStream rng(seed, static_cast<std::uint64_t>(id), Purpose::kVerify, 1);
      const auto samples = sample_values(it.dist, opt.fallback_samples, rng);
      return score_from_samples(g, samples, inst.k(id)).r_hat;
    }
  };

  SandwichReport rep;
  rep.sketch = score_sketch(inst, score, set);
  rep.lower = opt.p_factor(rep.sketch.d) * rep.sketch.v_min;
  rep.upper = opt.q_factor(rep.sketch.d) * rep.sketch.v_max;
  MonteCarloOracle mc(inst, g, opt.mc_reps, seed, Purpose::kVerify, false);
  const auto est = mc.value(set);
  rep.u_hat = est.value;
  rep.std_error = est.std_error;
  const double slack = opt.se_multiplier * est.std_error;
  rep.pass = rep.lower - slack <= rep.u_hat && rep.u_hat <= rep.upper + slack;
  return rep;
}

/// CSV: item_id,cost,k,m,r_hat,degraded
inline void write_scores_csv(std::ostream& os, const ScoreTable& t) {
  os << "item_id,cost,k,m,r_hat,degraded\n";
  for (const auto& e : t.entries()) {
    os << e.id << ',' << format_double(e.cost) << ',' << e.k << ',' << e.m << ',' << format_double(e.r_hat) << ','
       << (e.degraded ? 1 : 0) << '\n';
  }
}

}  // namespace tsg
