#pragma once

// Experiment harness: synthetic instances, TSG-vs-CELF comparisons, sweeps,
// summaries, random corpora and the self-check suite.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tsg/distribution.hpp"
#include "tsg/errors.hpp"
#include "tsg/format.hpp"
#include "tsg/instance.hpp"
#include "tsg/parallel.hpp"
#include "tsg/rng.hpp"
#include "tsg/sample_complexity.hpp"
#include "tsg/scores.hpp"
#include "tsg/solvers.hpp"
#include "tsg/utility.hpp"
#include "tsg/value_function.hpp"

namespace tsg {

// ---------------------------------------------------------------------------
// Synthetic instances

enum class CostMode { kCorrelated, kIndependent };

inline const char* to_string(CostMode m) { return m == CostMode::kCorrelated ? "correlated" : "independent"; }

inline CostMode parse_cost_mode(std::string_view s) {
  if (s == "correlated") return CostMode::kCorrelated;
  if (s == "independent") return CostMode::kIndependent;
  throw ConfigError("unknown cost mode '" + std::string(s) + "'");
}

/// Value-distribution family: bernoulli | exponential | pareto:<shape> | deterministic.
struct DistFamily {
  enum class Kind { kBernoulli, kExponential, kPareto, kDeterministic } kind = Kind::kBernoulli;
  double shape = 0.0;

  static DistFamily parse(std::string_view tag) {
    DistFamily f;
    if (tag == "bernoulli") {
      f.kind = Kind::kBernoulli;
    } else if (tag == "exponential") {
      f.kind = Kind::kExponential;
    } else if (tag == "deterministic") {
      f.kind = Kind::kDeterministic;
    } else if (tag.starts_with("pareto:")) {
      f.kind = Kind::kPareto;
      try {
        f.shape = parse_double(tag.substr(7));
      } catch (const ParseError&) {
        throw ConfigError("bad Pareto shape in '" + std::string(tag) + "'");
      }
      if (!(f.shape > 1.0)) throw ConfigError("Pareto shape must exceed 1 for a finite mean");
    } else {
      throw ConfigError("unknown distribution family '" + std::string(tag) + "'");
    }
    return f;
  }

  std::string tag() const {
    switch (kind) {
      case Kind::kBernoulli: return "bernoulli";
      case Kind::kExponential: return "exponential";
      case Kind::kDeterministic: return "deterministic";
      case Kind::kPareto: return "pareto:" + format_double(shape);
    }
    return "?";
  }

  ValueDistribution with_mean(double mean) const {
    switch (kind) {
      case Kind::kBernoulli: return ValueDistribution::bernoulli(mean);
      case Kind::kExponential: return ValueDistribution::exponential(mean);
      case Kind::kDeterministic: return ValueDistribution::deterministic(mean);
      case Kind::kPareto: return pareto_from_mean(mean, shape);
    }
    throw ConfigError("unknown distribution family");
  }
};

struct SyntheticConfig {
  std::size_t n = 100;
  double budget = 30.0;
  std::string value_fn = "modular";
  std::string dist = "bernoulli";
  double lambda = 0.0;
  std::size_t samples = 250;  // N, training samples per item
  std::size_t instances = 20;
  std::uint64_t seed = 0;
  CostMode cost_mode = CostMode::kCorrelated;
  std::size_t test_reps = 50000;
  std::size_t threads = 1;

  void validate() const {
    if (n < 1) throw ConfigError("n must be >= 1");
    if (!(budget > 0.0)) throw ConfigError("B must be positive");
    if (samples < 1) throw ConfigError("N must be >= 1");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (1.0 + lambda > budget) throw ConfigError("lambda too large: cost 1 + lambda would exceed B");
    if (test_reps < 1) throw ConfigError("test_reps must be >= 1");
    DistFamily::parse(dist);
    ValueFunction::parse(value_fn);
  }
};

inline std::uint64_t instance_seed(const SyntheticConfig& cfg, std::size_t index) {
  return derive_seed(cfg.seed, 0x1A57, index);
}

/// Item i (id i, 0-based) gets mean mu_i ~ U(0, 1] and cost 1 + lambda mu_i,
/// or 1 + lambda mu'_i with an independent mu'_i in independent mode.
inline Instance generate_synthetic(const SyntheticConfig& cfg, std::size_t instance_index) {
  cfg.validate();
  const DistFamily family = DistFamily::parse(cfg.dist);
  const std::uint64_t seed = instance_seed(cfg, instance_index);
  std::vector<Item> items;
  items.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    RandomStream rng(seed, i, Purpose::kGeneration);
    const double mu = 1.0 - rng.uniform();
    const double cost_mu = cfg.cost_mode == CostMode::kCorrelated ? mu : 1.0 - rng.uniform();
    items.push_back({static_cast<ItemId>(i), 1.0 + cfg.lambda * cost_mu, family.with_mean(mu)});
  }
  return Instance(std::move(items), cfg.budget, seed);
}

// ---------------------------------------------------------------------------
// Comparisons

struct ComparisonRow {
  std::size_t instance = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double budget = 0.0;
  double lambda = 0.0;
  std::size_t samples = 0;
  std::string dist;
  std::string value_fn;
  CostMode cost_mode = CostMode::kCorrelated;
  double tsg_value = 0.0;
  double celf_value = 0.0;
  double ratio = 0.0;
  std::size_t tsg_size = 0;
  std::size_t celf_size = 0;
  double tsg_cost = 0.0;
  double celf_cost = 0.0;
  double tsg_seconds = 0.0;
  double celf_seconds = 0.0;
};

/// tsg / celf; 1 when both are zero.
inline double value_ratio(double tsg_value, double celf_value) {
  if (celf_value > 0.0) return tsg_value / celf_value;
  return tsg_value > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

/// One instance: scores from N samples, TSG and CELF (each comparing its
/// candidates on N realizations), both outputs scored on the same test stream.
inline ComparisonRow run_comparison(const SyntheticConfig& cfg, std::size_t instance_index) {
  const Instance inst = generate_synthetic(cfg, instance_index);
  const ValueFunction g = ValueFunction::parse(cfg.value_fn);
  const std::uint64_t seed = inst.seed();
  using clock = std::chrono::steady_clock;

  const auto t0 = clock::now();
  const ScoreTable scores = estimate_scores(inst, g, cfg.samples, seed);
  const Solution tsg_sol = test_score_greedy(inst, scores, g, cfg.samples, seed);
  const auto t1 = clock::now();
  const Solution celf_sol = celf(inst, g, cfg.samples, seed);
  const auto t2 = clock::now();

  MonteCarloOracle test(inst, g, cfg.test_reps, seed, Purpose::kTest);
  ComparisonRow row;
  row.instance = instance_index;
  row.seed = seed;
  row.n = cfg.n;
  row.budget = cfg.budget;
  row.lambda = cfg.lambda;
  row.samples = cfg.samples;
  row.dist = cfg.dist;
  row.value_fn = g.tag();
  row.cost_mode = cfg.cost_mode;
  row.tsg_value = test.value(tsg_sol.selected).value;
  row.celf_value = test.value(celf_sol.selected).value;
  row.ratio = value_ratio(row.tsg_value, row.celf_value);
  row.tsg_size = tsg_sol.selected.size();
  row.celf_size = celf_sol.selected.size();
  row.tsg_cost = tsg_sol.total_cost;
  row.celf_cost = celf_sol.total_cost;
  row.tsg_seconds = std::chrono::duration<double>(t1 - t0).count();
  row.celf_seconds = std::chrono::duration<double>(t2 - t1).count();
  return row;
}

inline std::vector<ComparisonRow> run_comparisons(const SyntheticConfig& cfg) {
  cfg.validate();
  std::vector<ComparisonRow> rows(cfg.instances);
  parallel_for(
      cfg.instances, [&](std::size_t i) { rows[i] = run_comparison(cfg, i); }, cfg.threads);
  return rows;
}

// Comparison CSV holds only seed-determined columns; wall times go to a
// separate timing CSV so reruns stay byte-identical.
inline void write_comparison_header(std::ostream& os) {
  os << "instance,seed,n,B,lambda,N,dist,value_fn,cost_mode,tsg_value,celf_value,ratio,tsg_size,celf_size,tsg_cost,"
        "celf_cost\n";
}

inline void write_comparison_row(std::ostream& os, const ComparisonRow& r) {
  os << r.instance << ',' << r.seed << ',' << r.n << ',' << format_double(r.budget) << ',' << format_double(r.lambda)
     << ',' << r.samples << ',' << r.dist << ',' << r.value_fn << ',' << to_string(r.cost_mode) << ','
     << format_double(r.tsg_value) << ',' << format_double(r.celf_value) << ',' << format_double(r.ratio) << ','
     << r.tsg_size << ',' << r.celf_size << ',' << format_double(r.tsg_cost) << ',' << format_double(r.celf_cost)
     << '\n';
}

inline void write_timing_header(std::ostream& os) { os << "instance,tsg_seconds,celf_seconds\n"; }

inline void write_timing_row(std::ostream& os, const ComparisonRow& r) {
  os << r.instance << ',' << format_double(r.tsg_seconds) << ',' << format_double(r.celf_seconds) << '\n';
}

/// Ratio column of a comparison CSV (header line required; '#' lines skipped).
inline std::vector<double> read_ratio_column(std::istream& is) {
  std::string line;
  long lineno = 0;
  std::optional<std::size_t> col;
  std::vector<double> out;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, ',');
    if (!col) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "ratio") col = i;
      }
      if (!col) throw ParseError("no ratio column", lineno);
      continue;
    }
    if (*col >= fields.size()) throw ParseError("short row", lineno);
    out.push_back(parse_double(fields[*col], lineno));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summaries

/// Linear-interpolation quantile of sorted data (q in [0, 1]).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct RatioSummary {
  std::size_t count = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;

  double iqr() const { return q3 - q1; }
  bool operator==(const RatioSummary&) const = default;
};

inline RatioSummary summarize_ratios(std::vector<double> ratios) {
  RatioSummary s;
  s.count = ratios.size();
  if (ratios.empty()) {
    s.median = s.q1 = s.q3 = s.min = s.max = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  std::sort(ratios.begin(), ratios.end());
  s.median = quantile_sorted(ratios, 0.5);
  s.q1 = quantile_sorted(ratios, 0.25);
  s.q3 = quantile_sorted(ratios, 0.75);
  s.min = ratios.front();
  s.max = ratios.back();
  return s;
}

inline RatioSummary summarize_rows(const std::vector<ComparisonRow>& rows) {
  std::vector<double> r;
  r.reserve(rows.size());
  for (const auto& row : rows) r.push_back(row.ratio);
  return summarize_ratios(std::move(r));
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { kLambda, kSamples, kDist, kValueFn };

inline SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "lambda") return SweepAxis::kLambda;
  if (s == "N") return SweepAxis::kSamples;
  if (s == "dist") return SweepAxis::kDist;
  if (s == "value_fn") return SweepAxis::kValueFn;
  throw ConfigError("unknown sweep axis '" + std::string(s) + "' (lambda | N | dist | value_fn)");
}

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kLambda: return "lambda";
    case SweepAxis::kSamples: return "N";
    case SweepAxis::kDist: return "dist";
    case SweepAxis::kValueFn: return "value_fn";
  }
  return "?";
}

struct SweepCell {
  std::string value;
  SyntheticConfig config;
  std::vector<ComparisonRow> rows;
  RatioSummary summary;
};

/// Configurations of a sweep: one per axis value, each with its own derived seed.
inline std::vector<SyntheticConfig> sweep_configs(const SyntheticConfig& base, SweepAxis axis,
                                                  const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one axis value");
  std::vector<SyntheticConfig> out;
  for (std::size_t c = 0; c < values.size(); ++c) {
    SyntheticConfig cfg = base;
    const std::string& v = values[c];
    try {
      switch (axis) {
        case SweepAxis::kLambda: cfg.lambda = parse_double(v); break;
        case SweepAxis::kSamples: cfg.samples = static_cast<std::size_t>(parse_uint(v)); break;
        case SweepAxis::kDist: cfg.dist = v; break;
        case SweepAxis::kValueFn: cfg.value_fn = v; break;
      }
    } catch (const ParseError&) {
      throw ConfigError("bad " + std::string(to_string(axis)) + " value '" + v + "'");
    }
    cfg.seed = derive_seed(base.seed, 0x5EE9, c);
    cfg.validate();
    out.push_back(std::move(cfg));
  }
  return out;
}

inline std::vector<SweepCell> sweep(const SyntheticConfig& base, SweepAxis axis, const std::vector<std::string>& values) {
  const auto configs = sweep_configs(base, axis, values);
  std::vector<SweepCell> cells;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    SweepCell cell;
    cell.value = values[c];
    cell.config = configs[c];
    cell.rows = run_comparisons(cell.config);
    cell.summary = summarize_rows(cell.rows);
    cells.push_back(std::move(cell));
  }
  return cells;
}

inline void write_summary_header(std::ostream& os) { os << "axis,value,count,median,q1,q3,iqr,min,max\n"; }

inline void write_summary_row(std::ostream& os, std::string_view axis, std::string_view value, const RatioSummary& s) {
  os << axis << ',' << value << ',' << s.count << ',' << format_double(s.median) << ',' << format_double(s.q1) << ','
     << format_double(s.q3) << ',' << format_double(s.iqr()) << ',' << format_double(s.min) << ','
     << format_double(s.max) << '\n';
}

/// File-name-safe form of an axis value.
inline std::string cell_file_name(SweepAxis axis, std::string_view value) {
  std::string out = std::string("cell_") + to_string(axis) + "_";
  for (char c : value) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '-';
    out += ok ? c : '_';
  }
  return out + ".csv";
}

/// Writes one CSV per cell, a timing CSV per cell and summary.csv into `dir`.
/// `header` (may be empty) is written as the first line of every file.
inline void write_sweep_outputs(const std::filesystem::path& dir, SweepAxis axis, const std::vector<SweepCell>& cells,
                                const std::string& header) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name);
    if (!f) throw Error("cannot write " + (dir / name).string());
    if (!header.empty()) f << header << '\n';
    return f;
  };
  auto summary = open("summary.csv");
  write_summary_header(summary);
  for (const auto& cell : cells) {
    const std::string name = cell_file_name(axis, cell.value);
    auto f = open(name);
    write_comparison_header(f);
    for (const auto& r : cell.rows) write_comparison_row(f, r);
    auto t = open("timing_" + name);
    write_timing_header(t);
    for (const auto& r : cell.rows) write_timing_row(t, r);
    write_summary_row(summary, to_string(axis), cell.value, cell.summary);
  }
}

// ---------------------------------------------------------------------------
// Random corpora for property checks

struct SmallCorpusOptions {
  std::size_t min_items = 3;
  std::size_t max_items = 10;
  std::size_t min_fit = 2;  // rough number of items a budget holds
  std::size_t max_fit = 6;
  bool equal_costs = false;
  bool bernoulli_only = false;
  double budget = 10.0;
};

/// Small instance with two-point value supports: Bernoulli(p) or a
/// deterministic value spread over two orders of magnitude.
inline Instance random_small_instance(std::uint64_t seed, const SmallCorpusOptions& opt = {}) {
  RandomStream rng(seed, 0, Purpose::kGeneration);
  const std::size_t n = opt.min_items + rng.below(opt.max_items - opt.min_items + 1);
  const std::size_t fit = opt.min_fit + rng.below(opt.max_fit - opt.min_fit + 1);
  const double budget = opt.budget;
  std::vector<Item> items;
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream r(seed, i + 1, Purpose::kGeneration);
    double cost = budget / static_cast<double>(fit);
    if (!opt.equal_costs) cost = std::min(budget, budget / (static_cast<double>(fit) * (0.6 + 0.8 * r.uniform())));
    ValueDistribution dist = ValueDistribution::deterministic(0.0);
    if (opt.bernoulli_only || r.below(2) == 0) {
      dist = ValueDistribution::bernoulli(0.05 + 0.9 * r.uniform());
    } else {
      dist = ValueDistribution::deterministic(std::pow(10.0, 2.0 * r.uniform() - 1.0));
    }
    items.push_back({static_cast<ItemId>(i + 1), cost, std::move(dist)});
  }
  return Instance(std::move(items), budget, seed);
}

/// Random feasible subset: items in random order, each added if it fits,
/// stopping at a random target size.
inline ItemSet random_feasible_set(const Instance& inst, RandomStream& rng) {
  ItemSet ids = inst.ids();
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  ItemSet out;
  double used = 0.0;
  const std::size_t stop = 1 + rng.below(ids.size());
  for (ItemId id : ids) {
    const double c = inst.item(id).cost;
    if (used + c <= inst.budget()) {
      out.push_back(id);
      used += c;
      if (out.size() >= stop) break;
    }
  }
  return out;
}

/// Cost profile concentrated just above B/(j+1), where relative cost is
/// largest for a given budget share.
inline std::vector<double> random_cost_profile(RandomStream& rng, double budget, std::size_t n) {
  std::vector<double> costs;
  for (std::size_t i = 0; i < n; ++i) {
    const double j = static_cast<double>(1 + rng.below(rng.below(2) ? 8 : 60));
    const double bump = rng.below(2) ? 1e-9 * (1.0 + rng.uniform()) : rng.uniform();
    costs.push_back(std::min(budget, budget / (j + 1.0) * (1.0 + bump)));
  }
  return costs;
}

/// Costs just above B/2, B/3, B/7, B/43: replication counts 1, 2, 6, 42 with
/// all four items fitting together.
inline Instance near_worst_relative_cost_instance(double budget = 1.0) {
  const double eps = 1e-9;
  std::vector<Item> items;
  const double denoms[] = {2.0, 3.0, 7.0, 43.0};
  ItemId id = 1;
  for (double q : denoms) items.push_back({id++, budget / q * (1.0 + eps), ValueDistribution::deterministic(1.0)});
  return Instance(std::move(items), budget);
}

inline bool distinct_scores(const ScoreTable& scores) {
  std::vector<double> v;
  for (const auto& e : scores.entries()) v.push_back(e.r_hat);
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) == v.end();
}

/// Random permutation of the instance ids.
inline ItemSet random_arrival_order(const Instance& inst, RandomStream& rng) {
  ItemSet ids = inst.ids();
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  return ids;
}

// ---------------------------------------------------------------------------
// Statistics helpers

/// P(X <= successes) for X ~ Binomial(trials, p).
inline double binomial_cdf(std::size_t successes, std::size_t trials, double p) {
  if (successes >= trials) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  const double n = static_cast<double>(trials);
  double total = 0.0;
  for (std::size_t i = 0; i <= successes; ++i) {
    const double x = static_cast<double>(i);
    total += std::exp(std::lgamma(n + 1) - std::lgamma(x + 1) - std::lgamma(n - x + 1) + x * std::log(p) +
                      (n - x) * std::log1p(-p));
  }
  return std::min(1.0, total);
}

/// One-sided test of H0: success rate >= target. Passes unless H0 is
/// rejected at the given confidence.
inline bool coverage_consistent(std::size_t successes, std::size_t trials, double target, double confidence = 0.99) {
  if (trials == 0) return true;
  return binomial_cdf(successes, trials, target) >= 1.0 - confidence;
}

// ---------------------------------------------------------------------------
// Coverage trials

enum class SampleBound { kHoeffding, kMcDiarmid, kTopSet };

inline const char* to_string(SampleBound b) {
  switch (b) {
    case SampleBound::kHoeffding: return "hoeffding";
    case SampleBound::kMcDiarmid: return "mcdiarmid";
    case SampleBound::kTopSet: return "topset";
  }
  return "?";
}

struct CoverageResult {
  std::size_t trials = 0;
  std::size_t successes = 0;
  std::int64_t samples = 0;  // T of the last trial
};

/// Single Bernoulli item replicated k times (budget = k, cost 1): fraction of
/// trials with |r_hat - r| <= eps r at the bound's T.
inline CoverageResult single_item_coverage(SampleBound bound, const ValueFunction& g, double mean, std::int64_t k,
                                           const AccuracySpec& acc, std::size_t trials, std::uint64_t seed) {
  const auto dist = ValueDistribution::bernoulli(mean);
  const double r = exact_replicated_value(g, dist, k);
  const SupNorms norms = g_sup_norms(g, 1.0, k);
  std::int64_t t = 0;
  if (bound == SampleBound::kHoeffding) t = hoeffding_samples(k, norms.g_sup, r, acc);
  else if (bound == SampleBound::kMcDiarmid) t = mcdiarmid_samples(k, norms.g1_sup, r, acc);
  else throw InvalidParameterError("single-item coverage takes the Hoeffding or McDiarmid bound");

  CoverageResult res;
  res.samples = t;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    RandomStream rng(seed, trial, Purpose::kVerify, static_cast<std::uint64_t>(k));
    const auto xs = sample_values(dist, static_cast<std::size_t>(t), rng);
    const double est = score_from_samples(g, xs, k).r_hat;
    ++res.trials;
    if (std::abs(est - r) <= acc.epsilon * r) ++res.successes;
  }
  return res;
}

/// Top-set accuracy on `n` Bernoulli items with replication count k: each
/// trial estimates scores at the top-set T_i and checks that every item of
/// the estimated top k'+1 has true score >= (1 - eps) times every excluded
/// item's true score.
inline CoverageResult topset_coverage(const ValueFunction& g, std::size_t n, std::int64_t k, const AccuracySpec& acc,
                                      std::size_t trials, std::uint64_t seed) {
  std::vector<Item> items;
  RandomStream gen(seed, 0, Purpose::kGeneration);
  for (std::size_t i = 0; i < n; ++i) {
    items.push_back({static_cast<ItemId>(i), 1.0, ValueDistribution::bernoulli(0.2 + 0.7 * gen.uniform())});
  }
  // Budget k with unit costs: every item has replication count k; the cut
  // keeps k items.
  const Instance inst(std::move(items), static_cast<double>(k), seed);
  const ScoreTable truth = exact_scores(inst, g);
  const ItemSet ranking = rank_by_score(inst, [&](ItemId id) { return truth.score(id); });
  const std::size_t cut = budget_cut(inst, ranking);
  const double r_cut = truth.score(ranking[std::min(cut, ranking.size() - 1)]);

  std::vector<ItemBoundInputs> inputs;
  for (const auto& it : inst.items()) {
    const auto norms = g_sup_norms(g, 1.0, inst.k(it.id));
    inputs.push_back({inst.k(it.id), norms.g_sup, norms.g1_sup});
  }
  const auto t = topset_samples(inputs, r_cut, acc);

  CoverageResult res;
  res.samples = t.front();
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::vector<ScoreEntry> entries;
    for (std::size_t i = 0; i < inst.size(); ++i) {
      const Item& it = inst.items()[i];
      RandomStream rng(seed, static_cast<std::uint64_t>(it.id), Purpose::kVerify, trial + 1);
      const auto xs = sample_values(it.dist, static_cast<std::size_t>(t[i]), rng);
      ScoreEntry e = score_from_samples(g, xs, inst.k(it.id));
      e.id = it.id;
      e.cost = it.cost;
      entries.push_back(e);
    }
    const ScoreTable est(std::move(entries), 0, g.tag());
    const double eps_needed = epsilon_diagnostic(inst, est, [&](ItemId id) { return truth.score(id); });
    ++res.trials;
    if (eps_needed <= acc.epsilon) ++res.successes;
  }
  return res;
}

/// Ranking recovery at the gap-form sample size. Bernoulli items with unit
/// costs and budget k, means spaced `spacing` apart from 0.9 downwards
/// (k + 3 items; spacing 0 picks min(0.2, 0.8 / (k + 2))), so every item has replication count k and the cut keeps k
/// items. A trial succeeds when the estimated top k set and the estimated
/// (k+1)-th item both agree with the truth.
inline CoverageResult gap_coverage(const ValueFunction& g, std::int64_t k, double delta, std::size_t trials,
                                   std::uint64_t seed, double spacing = 0.0) {
  if (k < 1) throw InvalidParameterError("k must be >= 1");
  const std::size_t n = static_cast<std::size_t>(k) + 3;
  if (spacing == 0.0) spacing = std::min(0.2, 0.8 / static_cast<double>(n - 1));
  if (!(spacing > 0.0) || 0.9 - spacing * static_cast<double>(n - 1) <= 0.0) {
    throw InvalidParameterError("mean spacing leaves the unit interval");
  }
  std::vector<Item> items;
  for (std::size_t i = 0; i < n; ++i) {
    items.push_back({static_cast<ItemId>(i + 1), 1.0,
                     ValueDistribution::bernoulli(0.9 - spacing * static_cast<double>(i))});
  }
  const Instance inst(std::move(items), static_cast<double>(k), seed);
  const ScoreTable truth = exact_scores(inst, g);
  const ItemSet true_rank = rank_by_score(inst, [&](ItemId id) { return truth.score(id); });
  const std::size_t cut = budget_cut(inst, true_rank);
  const double gap = 0.5 * std::min(truth.score(true_rank[cut - 1]) - truth.score(true_rank[cut]),
                                    truth.score(true_rank[cut]) - truth.score(true_rank[cut + 1]));
  std::vector<ItemBoundInputs> inputs;
  for (const auto& it : inst.items()) {
    const auto norms = g_sup_norms(g, 1.0, inst.k(it.id));
    inputs.push_back({inst.k(it.id), norms.g_sup, norms.g1_sup});
  }
  const auto t = gap_samples(inputs, gap, delta);
  ItemSet top(true_rank.begin(), true_rank.begin() + static_cast<std::ptrdiff_t>(cut));
  std::sort(top.begin(), top.end());

  CoverageResult res;
  res.samples = t.front();
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::vector<ScoreEntry> entries;
    for (std::size_t i = 0; i < inst.size(); ++i) {
      const Item& it = inst.items()[i];
      RandomStream rng(seed, static_cast<std::uint64_t>(it.id), Purpose::kVerify, trial + 1);
      const auto xs = sample_values(it.dist, static_cast<std::size_t>(t[i]), rng);
      ScoreEntry e = score_from_samples(g, xs, inst.k(it.id));
      e.id = it.id;
      e.cost = it.cost;
      entries.push_back(e);
    }
    const ScoreTable est(std::move(entries), 0, g.tag());
    const ItemSet rank = rank_by_score(inst, [&](ItemId id) { return est.score(id); });
    ItemSet got(rank.begin(), rank.begin() + static_cast<std::ptrdiff_t>(cut));
    std::sort(got.begin(), got.end());
    ++res.trials;
    if (got == top && rank[cut] == true_rank[cut]) ++res.successes;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Self-check suite

struct CheckResult {
  std::string name;
  bool pass = true;
  std::size_t cases = 0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  std::vector<std::string> warnings;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
};

struct VerifyOptions {
  std::size_t corpus = 40;
  std::uint64_t seed = 0;
  std::size_t sandwich_reps = 20000;
  // Injectable for mutation tests of the sandwich check.
  std::function<double(double)> q_factor = sketch_q;
};

inline std::vector<ValueFunction> dr_value_functions() {
  return {ValueFunction::modular(),    ValueFunction::power(0.5),      ValueFunction::top_r(1),
          ValueFunction::top_r(2),     ValueFunction::ces(2.0),        ValueFunction::success(SuccessCurve::kExp),
          ValueFunction::success(SuccessCurve::kMin), ValueFunction::saturating(1.0, 2.0)};
}

/// Approximation-ratio bound of test score greedy with exact scores and utilities.
inline double general_ratio_bound() { return guarantee_factor(GeneralRegime{}, 0.0); }

inline VerifyReport verify_suite(const VerifyOptions& opt) {
  VerifyReport rep;
  if (opt.corpus == 0) {
    rep.warnings.push_back("corpus size 0: no cases executed, checks pass vacuously");
    for (const char* name : {"relative_cost", "sandwich", "ratio_vs_brute_force", "streaming", "coverage"}) {
      rep.checks.push_back({name, true, 0, "vacuous"});
    }
    return rep;
  }
  const auto gs = dr_value_functions();
  auto fmt = [](double x) { return format_double(x); };

  {
    CheckResult c{"relative_cost", true, 0, {}};
    double worst = 0.0;
    for (std::size_t p = 0; p < opt.corpus; ++p) {
      RandomStream rng(opt.seed, p, Purpose::kVerify, 11);
      const auto costs = random_cost_profile(rng, 1.0, 12);
      std::vector<Item> items;
      for (std::size_t i = 0; i < costs.size(); ++i) {
        items.push_back({static_cast<ItemId>(i), costs[i], ValueDistribution::deterministic(1.0)});
      }
      const Instance inst(std::move(items), 1.0);
      for (int s = 0; s < 10; ++s) {
        const auto set = random_feasible_set(inst, rng);
        const double d = relative_cost(inst, set);
        worst = std::max(worst, d);
        ++c.cases;
        if (d > kMaxRelativeCost) c.pass = false;
      }
    }
    c.detail = "max d = " + fmt(worst);
    rep.checks.push_back(std::move(c));
  }

  {
    CheckResult c{"sandwich", true, 0, {}};
    SandwichOptions so;
    so.mc_reps = opt.sandwich_reps;
    so.fallback_samples = 100000;
    so.q_factor = opt.q_factor;
    std::size_t failures = 0;
    for (std::size_t t = 0; t < opt.corpus; ++t) {
      const std::uint64_t s = derive_seed(opt.seed, 0x5A, t);
      const Instance inst = random_small_instance(s);
      RandomStream rng(s, 0, Purpose::kVerify, 12);
      const auto set = random_feasible_set(inst, rng);
      const auto& g = gs[t % gs.size()];
      const auto r = verify_sandwich(inst, g, set, s, so);
      ++c.cases;
      if (!r.pass) ++failures;
    }
    c.pass = failures == 0;
    c.detail = std::to_string(failures) + " failures";
    rep.checks.push_back(std::move(c));
  }

  {
    CheckResult c{"ratio_vs_brute_force", true, 0, {}};
    const double bound = general_ratio_bound();
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < opt.corpus; ++t) {
      const std::uint64_t s = derive_seed(opt.seed, 0xB7, t);
      const Instance inst = random_small_instance(s);
      const auto& g = gs[t % gs.size()];
      ExactOracle oracle(inst, g);
      const ScoreTable scores = exact_scores(inst, g);
      const double v = test_score_greedy(inst, scores, oracle).utility_estimate;
      const double opt_v = brute_force(inst, oracle).utility_estimate;
      const double ratio = opt_v > 0.0 ? v / opt_v : 1.0;
      worst = std::min(worst, ratio);
      ++c.cases;
      if (ratio < bound) c.pass = false;
    }
    c.detail = "min ratio = " + fmt(worst) + ", bound = " + fmt(bound);
    rep.checks.push_back(std::move(c));
  }

  {
    CheckResult c{"streaming", true, 0, {}};
    std::size_t mismatches = 0;
    std::size_t skipped = 0;
    for (std::size_t t = 0; t < opt.corpus; ++t) {
      const std::uint64_t s = derive_seed(opt.seed, 0x57, t);
      SmallCorpusOptions so;
      so.max_items = 14;
      const Instance inst = random_small_instance(s, so);
      const auto& g = gs[t % gs.size()];
      ExactOracle oracle(inst, g);
      const ScoreTable scores = exact_scores(inst, g);
      if (!distinct_scores(scores)) {
        ++skipped;
        continue;
      }
      auto score = [&](ItemId id) { return scores.score(id); };
      const auto batch = tsg_candidates(inst, score);
      const double batch_value = test_score_greedy(inst, scores, oracle).utility_estimate;
      double cmin = inst.budget();
      for (const auto& it : inst.items()) cmin = std::min(cmin, it.cost);
      const auto mem_bound = static_cast<std::size_t>(std::ceil(2.0 * inst.budget() / cmin)) + 1;
      RandomStream rng(s, 0, Purpose::kVerify, 13);
      for (int perm = 0; perm < 5; ++perm) {
        const auto order = random_arrival_order(inst, rng);
        const auto [sol, stats] = streaming_tsg(inst, order, score, oracle);
        ++c.cases;
        ItemSet expect(batch.ranking.begin(), batch.ranking.begin() + static_cast<std::ptrdiff_t>(batch.k));
        if (batch.k < batch.ranking.size()) expect.push_back(batch.ranking[batch.k]);
        ItemSet got = stats.final_buffer;
        std::sort(expect.begin(), expect.end());
        std::sort(got.begin(), got.end());
        const bool ok = got == expect && stats.peak_buffer_items <= mem_bound &&
                        sol.utility_estimate <= batch_value + 1e-9 * std::max(1.0, batch_value);
        if (!ok) ++mismatches;
      }
    }
    c.pass = mismatches == 0;
    c.detail = std::to_string(mismatches) + " mismatches, " + std::to_string(skipped) + " tied-score instances skipped";
    rep.checks.push_back(std::move(c));
  }

  {
    CheckResult c{"coverage", true, 0, {}};
    const AccuracySpec acc(0.2, 0.1);
    const ValueFunction g = ValueFunction::modular();
    std::ostringstream detail;
    for (std::int64_t k : {1, 2, 5}) {
      for (SampleBound b : {SampleBound::kHoeffding, SampleBound::kMcDiarmid}) {
        const auto r = single_item_coverage(b, g, 0.5, k, acc, opt.corpus, derive_seed(opt.seed, 0xC0, k));
        c.cases += r.trials;
        if (!coverage_consistent(r.successes, r.trials, 1.0 - acc.delta)) c.pass = false;
        detail << to_string(b) << " k=" << k << ' ' << r.successes << '/' << r.trials << "; ";
      }
    }
    c.detail = detail.str();
    rep.checks.push_back(std::move(c));
  }
  return rep;
}

}  // namespace tsg
