#pragma once

// Selection algorithms: test score greedy (two candidate sets), its
// single-pass streaming variant, the lazy-greedy value-oracle benchmark
// (CELF) and an exhaustive exact oracle for small instances.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "tsg/errors.hpp"
#include "tsg/format.hpp"
#include "tsg/instance.hpp"
#include "tsg/scores.hpp"
#include "tsg/utility.hpp"
#include "tsg/value_function.hpp"

namespace tsg {

enum class Winner { kSStar, kSStarStar, kSingleton, kCelf, kExact };

inline const char* to_string(Winner w) {
  switch (w) {
    case Winner::kSStar: return "S_star";
    case Winner::kSStarStar: return "S_star_star";
    case Winner::kSingleton: return "singleton";
    case Winner::kCelf: return "celf";
    case Winner::kExact: return "exact";
  }
  return "?";
}

struct Candidate {
  ItemSet set;
  UtilityEstimate estimate;
  Winner tag = Winner::kSStar;
};

struct Solution {
  ItemSet selected;
  double total_cost = 0.0;
  double utility_estimate = 0.0;
  double utility_stderr = 0.0;
  Winner winner = Winner::kSStar;
  std::vector<Candidate> candidates;
};

namespace detail {

inline Solution finish(const Instance& inst, const Candidate& c, std::vector<Candidate> all) {
  Solution s;
  s.selected = c.set;
  s.total_cost = inst.cost_of(c.set);
  s.utility_estimate = c.estimate.value;
  s.utility_stderr = c.estimate.std_error;
  s.winner = c.tag;
  s.candidates = std::move(all);
  return s;
}

}  // namespace detail

/// Item ids by descending score, ties by ascending id.
inline ItemSet rank_by_score(const Instance& inst, const std::function<double(ItemId)>& score) {
  ItemSet order = inst.ids();
  std::vector<double> s(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) s[i] = score(order[i]);
  std::vector<std::size_t> idx(order.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (s[a] != s[b]) return s[a] > s[b];
    return order[a] < order[b];
  });
  ItemSet out;
  out.reserve(order.size());
  for (std::size_t i : idx) out.push_back(order[i]);
  return out;
}

/// Length of the longest prefix of `ranking` whose total cost fits the budget.
inline std::size_t budget_cut(const Instance& inst, std::span<const ItemId> ranking) {
  double total = 0.0;
  std::size_t k = 0;
  for (ItemId id : ranking) {
    total += inst.item(id).cost;
    if (total > inst.budget()) break;
    ++k;
  }
  return k;
}

struct TsgCandidates {
  ItemSet ranking;
  std::size_t k = 0;  // |prefix| that fits; ranking[k] is the first rejected item
  ItemSet s_star;
  std::optional<ItemSet> s_star_star;  // absent when every item fits
};

/// Builds both candidate sets: S* = top-k prefix extended greedily over
/// ranks k+2..n; S** = {rank k+1} extended over ranks 1..k, k+2..n.
inline TsgCandidates tsg_candidates(const Instance& inst, const std::function<double(ItemId)>& score) {
  if (inst.empty()) throw DomainError("test score greedy needs a nonempty instance");
  TsgCandidates c;
  c.ranking = rank_by_score(inst, score);
  c.k = budget_cut(inst, c.ranking);
  const std::size_t n = c.ranking.size();
  const double budget = inst.budget();

  c.s_star.assign(c.ranking.begin(), c.ranking.begin() + static_cast<std::ptrdiff_t>(c.k));
  if (c.k == n) return c;

  double used = inst.cost_of(c.s_star);
  for (std::size_t i = c.k + 1; i < n; ++i) {
    const double ci = inst.item(c.ranking[i]).cost;
    if (used + ci <= budget) {
      c.s_star.push_back(c.ranking[i]);
      used += ci;
    }
  }

  ItemSet ss{c.ranking[c.k]};
  used = inst.item(c.ranking[c.k]).cost;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == c.k) continue;
    const double ci = inst.item(c.ranking[i]).cost;
    if (used + ci <= budget) {
      ss.push_back(c.ranking[i]);
      used += ci;
    }
  }
  c.s_star_star = std::move(ss);
  return c;
}

/// Test score greedy: returns the better of S* and S** under `oracle`
/// (ties keep S*).
inline Solution test_score_greedy(const Instance& inst, const ScoreTable& scores, UtilityOracle& oracle) {
  for (const auto& it : inst.items()) {
    if (!scores.contains(it.id)) throw UnknownItemError("score table lacks item " + std::to_string(it.id));
  }
  const auto c = tsg_candidates(inst, [&scores](ItemId id) { return scores.score(id); });
  std::vector<Candidate> all;
  all.push_back({c.s_star, oracle.value(c.s_star), Winner::kSStar});
  if (c.s_star_star) all.push_back({*c.s_star_star, oracle.value(*c.s_star_star), Winner::kSStarStar});
  std::size_t best = 0;
  if (all.size() == 2 && all[1].estimate.value > all[0].estimate.value) best = 1;
  return detail::finish(inst, all[best], all);
}

/// Monte Carlo comparison with `eval_reps` realizations on the evaluation streams.
inline Solution test_score_greedy(const Instance& inst, const ScoreTable& scores, const ValueFunction& g, std::size_t eval_reps,
                    std::uint64_t seed) {
  MonteCarloOracle oracle(inst, g, eval_reps, seed, Purpose::kEvaluation);
  return test_score_greedy(inst, scores, oracle);
}

// ---------------------------------------------------------------------------
// Streaming

struct StreamStats {
  std::size_t peak_buffer_items = 0;
  std::size_t updates = 0;  // arrivals admitted to the buffer
  ItemSet final_buffer;
};

/// Single-pass buffer of the best-scoring items. The buffer is kept sorted by
/// descending score (ties by ascending id) and trimmed to the shortest prefix
/// whose cost exceeds the budget; arrivals are admitted while the buffer still
/// fits the budget, or when they strictly beat the lowest buffered score.
class StreamingSelector {
 public:
  explicit StreamingSelector(double budget) : budget_(budget) {
    if (!(budget_ > 0.0)) throw InvalidParameterError("budget must be positive");
  }

  void push(ItemId id, double cost, double score) {
    if (!seen_.insert(id).second) throw ProtocolError("item " + std::to_string(id) + " arrived twice");
    if (!(cost > 0.0) || cost > budget_) throw InfeasibleItemError("streamed item cost outside (0, B]");
    const bool fits = buffer_cost() <= budget_;
    if (!fits && !(score > buffer_.back().score)) return;

    Entry e{id, cost, score};
    auto pos = std::upper_bound(buffer_.begin(), buffer_.end(), e, ranks_before);
    buffer_.insert(pos, e);
    ++stats_.updates;
    stats_.peak_buffer_items = std::max(stats_.peak_buffer_items, buffer_.size());

    double prefix = 0.0;
    for (std::size_t j = 0; j < buffer_.size(); ++j) {
      prefix += buffer_[j].cost;
      if (prefix > budget_) {
        buffer_.resize(j + 1);
        break;
      }
    }
  }

  double buffer_cost() const {
    double total = 0.0;
    for (const auto& e : buffer_) total += e.cost;
    return total;
  }

  ItemSet buffer_ids() const {
    ItemSet out;
    for (const auto& e : buffer_) out.push_back(e.id);
    return out;
  }

  const StreamStats& stats() const noexcept { return stats_; }

  /// Candidate pair at end of stream: the buffer without its lowest-score
  /// item, and that item alone. When the whole buffer fits, it is the only
  /// candidate.
  std::vector<Candidate> candidates() const {
    if (buffer_.empty()) return {};
    if (buffer_cost() <= budget_) return {{buffer_ids(), {}, Winner::kSStar}};
    ItemSet rest = buffer_ids();
    const ItemId last = rest.back();
    rest.pop_back();
    std::vector<Candidate> out;
    if (!rest.empty()) out.push_back({rest, {}, Winner::kSStar});
    out.push_back({{last}, {}, Winner::kSingleton});
    return out;
  }

 private:
  struct Entry {
    ItemId id;
    double cost;
    double score;
  };

  static bool ranks_before(const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  }

  double budget_;
  std::vector<Entry> buffer_;
  std::unordered_set<ItemId> seen_;
  StreamStats stats_;
};

/// Streams `arrivals` (item ids of `inst` in arrival order) through the
/// buffer, then returns the better candidate under `oracle`.
inline std::pair<Solution, StreamStats> streaming_tsg(const Instance& inst, std::span<const ItemId> arrivals,
                                                      const std::function<double(ItemId)>& score_fn,
                                                      UtilityOracle& oracle) {
  StreamingSelector sel(inst.budget());
  for (ItemId id : arrivals) sel.push(id, inst.item(id).cost, score_fn(id));
  StreamStats stats = sel.stats();
  stats.final_buffer = sel.buffer_ids();
  auto cands = sel.candidates();
  if (cands.empty()) return {Solution{}, stats};
  for (auto& c : cands) c.estimate = oracle.value(c.set);
  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    if (cands[i].estimate.value > cands[best].estimate.value) best = i;
  }
  return {detail::finish(inst, cands[best], cands), stats};
}

inline std::pair<Solution, StreamStats> streaming_tsg(const Instance& inst, std::span<const ItemId> arrivals,
                                                      const std::function<double(ItemId)>& score_fn,
                                                      const ValueFunction& g, std::size_t eval_reps,
                                                      std::uint64_t seed) {
  MonteCarloOracle oracle(inst, g, eval_reps, seed, Purpose::kEvaluation);
  return streaming_tsg(inst, arrivals, score_fn, oracle);
}

// ---------------------------------------------------------------------------
// CELF

enum class GreedyRule { kBenefit, kCostBenefit };

/// One lazy greedy pass. Queue keys are marginal gains (benefit) or gains per
/// unit cost (cost-benefit); an entry is re-estimated when popped stale and
/// selected when popped fresh. Ties: larger key, then (cost-benefit only)
/// lower cost, then lower id.
inline ItemSet lazy_greedy(const Instance& inst, UtilityOracle& marginal_oracle, GreedyRule rule) {
  struct Entry {
    double key;
    double cost;
    ItemId id;
    std::size_t round;
  };
  auto lower_priority = [rule](const Entry& a, const Entry& b) {
    if (a.key != b.key) return a.key < b.key;
    if (rule == GreedyRule::kCostBenefit && a.cost != b.cost) return a.cost > b.cost;
    return a.id > b.id;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower_priority)> queue(lower_priority);

  ItemSet selected;
  auto key_of = [&](const Item& it) {
    const double gain = marginal_oracle.marginal(selected, it.id).value;
    return rule == GreedyRule::kBenefit ? gain : gain / it.cost;
  };
  for (const auto& it : inst.items()) queue.push({key_of(it), it.cost, it.id, 0});

  double remaining = inst.budget();
  std::size_t round = 0;
  while (!queue.empty()) {
    Entry top = queue.top();
    queue.pop();
    if (top.cost > remaining) continue;
    if (top.round == round) {
      selected.push_back(top.id);
      remaining -= top.cost;
      ++round;
      continue;
    }
    top.key = key_of(inst.item(top.id));
    top.round = round;
    queue.push(top);
  }
  return selected;
}

/// Better of the benefit and cost-benefit lazy greedy passes, compared under
/// `final_oracle`.
inline Solution celf(const Instance& inst, UtilityOracle& marginal_oracle, UtilityOracle& final_oracle) {
  std::vector<Candidate> all;
  for (auto rule : {GreedyRule::kBenefit, GreedyRule::kCostBenefit}) {
    ItemSet s = lazy_greedy(inst, marginal_oracle, rule);
    const auto est = final_oracle.value(s);
    all.push_back({std::move(s), est, Winner::kCelf});
  }
  const std::size_t best = all[1].estimate.value > all[0].estimate.value ? 1 : 0;
  return detail::finish(inst, all[best], all);
}

/// Every marginal estimate draws `n_eval` fresh joint realizations from the
/// CELF streams; the final comparison uses `n_eval` common realizations.
inline Solution celf(const Instance& inst, const ValueFunction& g, std::size_t n_eval, std::uint64_t seed) {
  MonteCarloOracle marginals(inst, g, n_eval, seed, Purpose::kCelf, true);
  MonteCarloOracle final_cmp(inst, g, n_eval, derive_seed(seed, 0xCE1F), Purpose::kCelf, false);
  return celf(inst, marginals, final_cmp);
}

// ---------------------------------------------------------------------------
// Exact oracle

inline constexpr std::size_t kBruteForceMaxItems = 20;

/// Exhaustive search over all subsets that fit `budget` (defaults to the
/// instance budget). Ties go to the lexicographically smallest sorted id set.
inline Solution brute_force(const Instance& inst, UtilityOracle& exact, std::optional<double> budget = std::nullopt) {
  const std::size_t n = inst.size();
  if (n > kBruteForceMaxItems) throw CapacityError("brute force is limited to 20 items");
  const double cap = budget.value_or(inst.budget());
  ItemSet ids = inst.ids();
  std::sort(ids.begin(), ids.end());

  ItemSet best_set;
  double best = exact.value(best_set).value;
  ItemSet s;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    s.clear();
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) {
        s.push_back(ids[i]);
        cost += inst.item(ids[i]).cost;
      }
    }
    if (cost > cap) continue;
    const double v = exact.value(s).value;
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    if (v > best + tol || (std::abs(v - best) <= tol && s < best_set)) {
      best = v;
      best_set = s;
    }
  }
  return detail::finish(inst, Candidate{best_set, {best, 0.0}, Winner::kExact}, {});
}

inline Solution brute_force(const Instance& inst, const ValueFunction& g, std::optional<double> budget = std::nullopt) {
  ExactOracle oracle(inst, g);
  return brute_force(inst, oracle, budget);
}

// ---------------------------------------------------------------------------
// Diagnostics

/// Smallest eps >= 0 with min true score over the estimated top k+1 items
/// >= (1 - eps) * max true score outside the estimated top k.
inline double epsilon_diagnostic(const Instance& inst, const ScoreTable& scores,
                                 const std::function<double(ItemId)>& true_score) {
  const ItemSet ranking = rank_by_score(inst, [&scores](ItemId id) { return scores.score(id); });
  const std::size_t k = budget_cut(inst, ranking);
  if (k >= ranking.size()) return 0.0;
  double top_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= k; ++i) top_min = std::min(top_min, true_score(ranking[i]));
  double rest_max = 0.0;
  for (std::size_t i = k; i < ranking.size(); ++i) rest_max = std::max(rest_max, true_score(ranking[i]));
  if (rest_max <= 0.0) return 0.0;
  return std::max(0.0, 1.0 - top_min / rest_max);
}

// ---------------------------------------------------------------------------
// CSV

struct SolutionRow {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double budget = 0.0;
  std::string value_fn;
  Solution solution;
};

inline void write_solution_header(std::ostream& os) {
  os << "algorithm,seed,n,B,value_fn,selected,cost,utility_estimate,utility_stderr\n";
}

inline void write_solution_row(std::ostream& os, const SolutionRow& r) {
  ItemSet sel = r.solution.selected;
  std::sort(sel.begin(), sel.end());
  os << r.algorithm << ',' << r.seed << ',' << r.n << ',' << format_double(r.budget) << ',' << r.value_fn << ','
     << join_ids<ItemId>(sel) << ',' << format_double(r.solution.total_cost) << ','
     << format_double(r.solution.utility_estimate) << ',' << format_double(r.solution.utility_stderr) << '\n';
}

}  // namespace tsg
