#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "tsg/errors.hpp"
#include "tsg/rng.hpp"

namespace tsg {

struct Bernoulli {
  double mean;
};

struct Exponential {
  double mean;
};

/// Type I Pareto: P(X > x) = (scale / x)^shape for x >= scale.
struct ParetoTypeI {
  double shape;
  double scale;
};

struct Deterministic {
  double value;
};

struct Empirical {
  std::vector<double> samples;
};

/// One atom of a finite distribution.
struct Atom {
  double value;
  double probability;
};

/// Immutable value distribution of a single item. Construct through the named
/// factories, which enforce the parameter ranges.
class ValueDistribution {
 public:
  using Variant = std::variant<Bernoulli, Exponential, ParetoTypeI, Deterministic, Empirical>;

  static ValueDistribution bernoulli(double mean) {
    if (!(mean >= 0.0 && mean <= 1.0)) throw InvalidParameterError("bernoulli mean must lie in [0, 1]");
    return ValueDistribution(Bernoulli{mean});
  }

  static ValueDistribution exponential(double mean) {
    if (!(mean > 0.0) || !std::isfinite(mean)) throw InvalidParameterError("exponential mean must be positive");
    return ValueDistribution(Exponential{mean});
  }

  static ValueDistribution pareto(double shape, double scale) {
    if (!(shape > 1.0) || !std::isfinite(shape)) throw InvalidParameterError("pareto shape must exceed 1");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidParameterError("pareto scale must be positive");
    return ValueDistribution(ParetoTypeI{shape, scale});
  }

  static ValueDistribution deterministic(double value) {
    if (!(value >= 0.0) || !std::isfinite(value)) throw InvalidParameterError("deterministic value must be >= 0");
    return ValueDistribution(Deterministic{value});
  }

  static ValueDistribution empirical(std::vector<double> samples) {
    if (samples.empty()) throw InvalidParameterError("empirical distribution needs at least one sample");
    for (double s : samples) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidParameterError("empirical samples must be finite and >= 0");
    }
    return ValueDistribution(Empirical{std::move(samples)});
  }

  const Variant& variant() const noexcept { return v_; }

  template <class T>
  bool holds() const noexcept {
    return std::holds_alternative<T>(v_);
  }

  template <class T>
  const T& as() const {
    return std::get<T>(v_);
  }

  /// Short tag used by the serializers: bernoulli, exponential, pareto, deterministic, empirical.
  std::string tag() const {
    return std::visit(
        [](const auto& d) -> std::string {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Bernoulli>) return "bernoulli";
          else if constexpr (std::is_same_v<T, Exponential>) return "exponential";
          else if constexpr (std::is_same_v<T, ParetoTypeI>) return "pareto";
          else if constexpr (std::is_same_v<T, Deterministic>) return "deterministic";
          else return "empirical";
        },
        v_);
  }

  friend bool operator==(const ValueDistribution& a, const ValueDistribution& b) {
    return std::visit(
        [](const auto& x, const auto& y) -> bool {
          using X = std::decay_t<decltype(x)>;
          using Y = std::decay_t<decltype(y)>;
          if constexpr (!std::is_same_v<X, Y>) {
            return false;
          } else if constexpr (std::is_same_v<X, Bernoulli> || std::is_same_v<X, Exponential>) {
            return x.mean == y.mean;
          } else if constexpr (std::is_same_v<X, ParetoTypeI>) {
            return x.shape == y.shape && x.scale == y.scale;
          } else if constexpr (std::is_same_v<X, Deterministic>) {
            return x.value == y.value;
          } else {
            return x.samples == y.samples;
          }
        },
        a.v_, b.v_);
  }

 private:
  explicit ValueDistribution(Variant v) : v_(std::move(v)) {}

  Variant v_;
};

/// Analytic mean; arithmetic mean for Empirical.
inline double dist_mean(const ValueDistribution& dist) {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Bernoulli> || std::is_same_v<T, Exponential>) {
          return d.mean;
        } else if constexpr (std::is_same_v<T, ParetoTypeI>) {
          return d.shape * d.scale / (d.shape - 1.0);
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          return d.value;
        } else {
          double s = 0.0;
          for (double x : d.samples) s += x;
          return s / static_cast<double>(d.samples.size());
        }
      },
      dist.variant());
}

/// Pareto whose mean equals `mean`: scale = mean * (shape - 1) / shape.
inline ValueDistribution pareto_from_mean(double mean, double shape) {
  if (!(shape > 1.0)) throw InvalidParameterError("pareto shape must exceed 1");
  if (!(mean > 0.0)) throw InvalidParameterError("pareto mean must be positive");
  return ValueDistribution::pareto(shape, mean * (shape - 1.0) / shape);
}

/// Single draw. Deterministic consumes no randomness; every other variant
/// consumes exactly one 64-bit output.
inline double sample_value(const ValueDistribution& dist, RandomStream& rng) {
  return std::visit(
      [&rng](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          return rng.uniform() < d.mean ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return -d.mean * std::log1p(-rng.uniform());
        } else if constexpr (std::is_same_v<T, ParetoTypeI>) {
          return d.scale * std::pow(1.0 - rng.uniform(), -1.0 / d.shape);
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          return d.value;
        } else {
          return d.samples[static_cast<std::size_t>(rng.below(d.samples.size()))];
        }
      },
      dist.variant());
}

inline std::vector<double> sample_values(const ValueDistribution& dist, std::size_t count, RandomStream& rng) {
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_value(dist, rng));
  return out;
}

/// Atoms of a finite-support distribution (values ascending, zero-mass atoms
/// dropped); nullopt for continuous variants.
inline std::optional<std::vector<Atom>> finite_support(const ValueDistribution& dist) {
  return std::visit(
      [](const auto& d) -> std::optional<std::vector<Atom>> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          std::vector<Atom> atoms;
          if (d.mean < 1.0) atoms.push_back({0.0, 1.0 - d.mean});
          if (d.mean > 0.0) atoms.push_back({1.0, d.mean});
          return atoms;
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          return std::vector<Atom>{{d.value, 1.0}};
        } else if constexpr (std::is_same_v<T, Empirical>) {
          std::map<double, std::size_t> counts;
          for (double x : d.samples) ++counts[x];
          std::vector<Atom> atoms;
          const double n = static_cast<double>(d.samples.size());
          for (const auto& [value, c] : counts) atoms.push_back({value, static_cast<double>(c) / n});
          return atoms;
        } else {
          return std::nullopt;
        }
      },
      dist.variant());
}

/// Essential supremum; +inf for Exponential and Pareto.
inline double support_max(const ValueDistribution& dist) {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          return d.mean > 0.0 ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          return d.value;
        } else if constexpr (std::is_same_v<T, Empirical>) {
          return *std::max_element(d.samples.begin(), d.samples.end());
        } else {
          return std::numeric_limits<double>::infinity();
        }
      },
      dist.variant());
}

/// Quantile used to truncate unbounded supports before sup-norm bounds.
inline double truncation_point(const ValueDistribution& dist, double quantile) {
  if (!(quantile > 0.0 && quantile < 1.0)) throw InvalidParameterError("truncation quantile must lie in (0, 1)");
  if (const auto* e = std::get_if<Exponential>(&dist.variant())) return -e->mean * std::log1p(-quantile);
  if (const auto* p = std::get_if<ParetoTypeI>(&dist.variant())) return p->scale * std::pow(1.0 - quantile, -1.0 / p->shape);
  return support_max(dist);
}

}  // namespace tsg
