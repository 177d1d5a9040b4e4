#pragma once

// Sufficient sample sizes for (eps, delta)-accurate score estimates and the
// approximation factors guaranteed for test score greedy.
//
// Every T that feeds the batch estimator is rounded up to a multiple of k so
// the estimator consumes whole batches; the floor is one batch (T >= k).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tsg/errors.hpp"

namespace tsg {

struct AccuracySpec {
  double epsilon;
  double delta;

  AccuracySpec(double eps, double del) : epsilon(eps), delta(del) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw InvalidParameterError("epsilon must lie in (0, 1]");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameterError("delta must lie in (0, 1)");
  }
};

namespace detail {

inline std::int64_t ceil_to_batches(double raw, std::int64_t k) {
  if (k < 1) throw InvalidParameterError("k must be >= 1");
  if (!std::isfinite(raw)) throw UndefinedBoundError("sample size bound is not finite");
  const double t = std::ceil(raw);
  const auto tt = static_cast<std::int64_t>(std::max(0.0, t));
  const std::int64_t batches = std::max<std::int64_t>(1, (tt + k - 1) / k);
  return batches * k;
}

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw UndefinedBoundError(std::string(what) + " must be positive");
}

}  // namespace detail

/// Hoeffding: T >= (1/2) k ||g||^2 / (eps^2 r^2) ln(1/delta).
inline std::int64_t hoeffding_samples(std::int64_t k, double g_sup, double r, const AccuracySpec& acc) {
  detail::require_positive(r, "score r");
  detail::require_positive(g_sup, "sup norm");
  const double raw = 0.5 * static_cast<double>(k) * g_sup * g_sup / (acc.epsilon * acc.epsilon * r * r) *
                     std::log(1.0 / acc.delta);
  return detail::ceil_to_batches(raw, k);
}

/// McDiarmid: T >= (1/2) k^2 ||g1||^2 / (eps^2 r^2) ln(1/delta).
inline std::int64_t mcdiarmid_samples(std::int64_t k, double g1_sup, double r, const AccuracySpec& acc) {
  detail::require_positive(r, "score r");
  detail::require_positive(g1_sup, "sup norm");
  const double kd = static_cast<double>(k);
  const double raw = 0.5 * kd * kd * g1_sup * g1_sup / (acc.epsilon * acc.epsilon * r * r) * std::log(1.0 / acc.delta);
  return detail::ceil_to_batches(raw, k);
}

/// Curvature form, independent of k:
/// T >= (1/2) ||g1||^2 / ((1 - alpha)^2 eps^2 E[g1(X)]^2) ln(1/delta).
inline std::int64_t curvature_samples(double g1_sup, double mu1, double alpha, const AccuracySpec& acc) {
  if (!(alpha >= 0.0)) throw InvalidParameterError("curvature must be >= 0");
  if (alpha >= 1.0) throw UndefinedBoundError("curvature 1 gives an unbounded sample size");
  detail::require_positive(mu1, "E[g1(X)]");
  const double raw = 0.5 * g1_sup * g1_sup / ((1.0 - alpha) * (1.0 - alpha) * acc.epsilon * acc.epsilon * mu1 * mu1) *
                     std::log(1.0 / acc.delta);
  return detail::ceil_to_batches(raw, 1);
}

struct ItemBoundInputs {
  std::int64_t k;
  double g_sup;
  double g1_sup;
};

namespace detail {

inline double min_branch(const ItemBoundInputs& in) {
  const double kd = static_cast<double>(in.k);
  return std::min(kd * in.g_sup * in.g_sup, kd * kd * in.g1_sup * in.g1_sup);
}

}  // namespace detail

/// Top-set accuracy: T_i >= 2 min(k ||g||^2, k^2 ||g1||^2) / (eps^2 r_cut^2) ln(2n/delta).
/// `n` defaults to the number of items.
inline std::vector<std::int64_t> topset_samples(std::span<const ItemBoundInputs> items, double r_cut,
                                                const AccuracySpec& acc, std::optional<std::size_t> n = std::nullopt) {
  detail::require_positive(r_cut, "cut score");
  const double nn = static_cast<double>(n.value_or(items.size()));
  std::vector<std::int64_t> out;
  out.reserve(items.size());
  for (const auto& in : items) {
    const double raw =
        2.0 * detail::min_branch(in) / (acc.epsilon * acc.epsilon * r_cut * r_cut) * std::log(2.0 * nn / acc.delta);
    out.push_back(detail::ceil_to_batches(raw, in.k));
  }
  return out;
}

/// Gap form: T_i >= (1/2) min(k ||g||^2, k^2 ||g1||^2) / Delta^2 ln(2n/delta).
inline std::vector<std::int64_t> gap_samples(std::span<const ItemBoundInputs> items, double gap, double delta,
                                             std::optional<std::size_t> n = std::nullopt) {
  if (!(gap > 0.0)) throw UndefinedBoundError("gap must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameterError("delta must lie in (0, 1)");
  const double nn = static_cast<double>(n.value_or(items.size()));
  std::vector<std::int64_t> out;
  out.reserve(items.size());
  for (const auto& in : items) {
    const double raw = 0.5 * detail::min_branch(in) / (gap * gap) * std::log(2.0 * nn / delta);
    out.push_back(detail::ceil_to_batches(raw, in.k));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Guarantee factors

/// Upper bound on the relative cost of a feasible set.
inline constexpr double kMaxRelativeCost = 1.7;

/// d([k+1]) <= d([k]) + 1 <= 2.7, used when no instance is at hand.
inline constexpr double kMaxCutRelativeCost = kMaxRelativeCost + 1.0;

inline double general_q() { return 1.0 + kMaxRelativeCost + 2.0 * std::sqrt(kMaxRelativeCost); }

struct GeneralRegime {};

struct BetaCostsRegime {
  double beta;
};

struct CurvatureRegime {
  double alpha;
  std::optional<double> beta;
  // d([k+1]) of the instance at hand; kMaxCutRelativeCost when unknown.
  std::optional<double> cut_relative_cost;
};

using GuaranteeRegime = std::variant<GeneralRegime, BetaCostsRegime, CurvatureRegime>;

inline double guarantee_factor(const GuaranteeRegime& regime, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidParameterError("epsilon must lie in [0, 1)");
  const double p = 1.0 - std::exp(-1.0);
  const double a = (1.0 - epsilon) * p;
  if (std::holds_alternative<GeneralRegime>(regime)) return a / (a + 2.0 * general_q());
  if (const auto* b = std::get_if<BetaCostsRegime>(&regime)) {
    if (!(b->beta >= 0.0 && b->beta <= 0.5)) throw InvalidParameterError("beta must lie in [0, 1/2]");
    if (b->beta == 0.5) return 0.0;
    const double q = (4.0 + 3.0 * b->beta / (1.0 - b->beta)) * (1.0 + b->beta / (1.0 - 2.0 * b->beta));
    return a / (a + q);
  }
  const auto& c = std::get<CurvatureRegime>(regime);
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw InvalidParameterError("alpha must lie in [0, 1]");
  if (c.beta) {
    const double beta = *c.beta;
    if (!(beta >= 0.0 && beta <= 0.5)) throw InvalidParameterError("beta must lie in [0, 1/2]");
    const double x = (1.0 - 2.0 * beta) / (1.0 - beta);
    const double shape = c.alpha < 1e-12 ? x : -std::expm1(-c.alpha * x) / c.alpha;
    return (1.0 - epsilon) * (1.0 - c.alpha) * (1.0 - beta) * shape;
  }
  const double d = c.cut_relative_cost.value_or(kMaxCutRelativeCost);
  if (!(d >= 1.0)) throw InvalidParameterError("d([k+1]) is at least 1");
  const double ad = c.alpha * d;
  const double shape = ad < 1e-12 ? 1.0 : -std::expm1(-ad) / ad;
  return (1.0 - epsilon) * (1.0 - c.alpha) * shape * (5.0 / 17.0);
}

}  // namespace tsg
