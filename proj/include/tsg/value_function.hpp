#pragma once

// Symmetric monotone group-value functions g and their analytic data.
//
// Every g here is evaluated on a vector of item values; shorter vectors are
// implicitly padded with zeros (every variant has g(x, 0) = g(x)).
// Evaluation reduces over a sorted copy of the input, so the result is
// bit-identical under any permutation of x.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "tsg/errors.hpp"
#include "tsg/format.hpp"
#include "tsg/rng.hpp"

namespace tsg {

enum class SuccessCurve {
  kMin,  // p(x) = min(x, 1)
  kExp,  // p(x) = 1 - exp(-x)
};

inline double success_curve(SuccessCurve c, double x) {
  return c == SuccessCurve::kMin ? std::min(x, 1.0) : -std::expm1(-x);
}

struct Modular {};

/// (sum x)^exponent, exponent in (0, 1].
struct TotalProductionPower {
  double exponent;
};

/// price * s / (v0 + s) with s = sum x.
struct TotalProductionSaturating {
  double price;
  double v0;
};

/// Sum of the r largest entries.
struct TopR {
  int r;
};

/// (sum x^r)^(1/r), r > 1.
struct Ces {
  double r;
};

/// 1 - prod (1 - p(x_i)).
struct SuccessProbability {
  SuccessCurve curve;
};

class ValueFunction;

struct WeightedTerm;

/// Nonnegative linear combination of other value functions.
struct Combination {
  std::shared_ptr<const std::vector<WeightedTerm>> terms;
};

class ValueFunction {
 public:
  using Variant = std::variant<Modular, TotalProductionPower, TotalProductionSaturating, TopR, Ces,
                               SuccessProbability, Combination>;

  ValueFunction() : v_(Modular{}) {}

  static ValueFunction modular() { return ValueFunction(Modular{}); }

  static ValueFunction power(double exponent) {
    if (!(exponent > 0.0 && exponent <= 1.0)) throw InvalidParameterError("power exponent must lie in (0, 1]");
    return ValueFunction(TotalProductionPower{exponent});
  }

  static ValueFunction saturating(double price, double v0) {
    if (!(price > 0.0) || !(v0 > 0.0)) throw InvalidParameterError("saturating parameters must be positive");
    return ValueFunction(TotalProductionSaturating{price, v0});
  }

  static ValueFunction top_r(int r) {
    if (r < 1) throw InvalidParameterError("top-r needs r >= 1");
    return ValueFunction(TopR{r});
  }

  static ValueFunction ces(double r) {
    if (!(r > 1.0) || !std::isfinite(r)) throw InvalidParameterError("CES degree must exceed 1");
    return ValueFunction(Ces{r});
  }

  static ValueFunction success(SuccessCurve curve) { return ValueFunction(SuccessProbability{curve}); }

  static ValueFunction combination(std::vector<WeightedTerm> terms);

  /// Parses `modular`, `power:a`, `sqrt`, `sat:p:v0`, `topr:r`, `max`,
  /// `ces:r`, `succ:min`, `succ:exp`, or `w*tag+w*tag+...`.
  static ValueFunction parse(std::string_view tag);

  const Variant& variant() const noexcept { return v_; }

  template <class T>
  bool holds() const noexcept {
    return std::holds_alternative<T>(v_);
  }

  bool is_modular() const noexcept {
    if (holds<Modular>()) return true;
    if (const auto* p = std::get_if<TotalProductionPower>(&v_)) return p->exponent == 1.0;
    return false;
  }

  /// Canonical tag; parse(tag()) reproduces the function.
  std::string tag() const;

  double operator()(std::span<const double> x) const;

 private:
  explicit ValueFunction(Variant v) : v_(std::move(v)) {}

  Variant v_;
};

struct WeightedTerm {
  double weight;
  ValueFunction fn;
};

inline ValueFunction ValueFunction::combination(std::vector<WeightedTerm> terms) {
  if (terms.empty()) throw InvalidParameterError("combination needs at least one term");
  for (const auto& t : terms) {
    if (!(t.weight >= 0.0) || !std::isfinite(t.weight)) throw InvalidParameterError("combination weights must be >= 0");
  }
  return ValueFunction(Combination{std::make_shared<const std::vector<WeightedTerm>>(std::move(terms))});
}

namespace detail {

inline std::vector<double>& scratch() {
  thread_local std::vector<double> buf;
  return buf;
}

// Ascending sorted copy in thread-local scratch.
inline std::span<const double> sorted_copy(std::span<const double> x) {
  auto& buf = scratch();
  buf.assign(x.begin(), x.end());
  std::sort(buf.begin(), buf.end());
  return buf;
}

inline double sum_sorted(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

}  // namespace detail

inline double ValueFunction::operator()(std::span<const double> x) const {
  for (double v : x) {
    if (!(v >= 0.0)) throw DomainError("value functions are defined on nonnegative vectors");
  }
  return std::visit(
      [x](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Combination>) {
          double total = 0.0;
          for (const auto& t : *g.terms) total += t.weight * t.fn(x);
          return total;
        } else {
          const auto s = detail::sorted_copy(x);
          if constexpr (std::is_same_v<T, Modular>) {
            return detail::sum_sorted(s);
          } else if constexpr (std::is_same_v<T, TotalProductionPower>) {
            const double sum = detail::sum_sorted(s);
            return g.exponent == 1.0 ? sum : std::pow(sum, g.exponent);
          } else if constexpr (std::is_same_v<T, TotalProductionSaturating>) {
            const double sum = detail::sum_sorted(s);
            return g.price * sum / (g.v0 + sum);
          } else if constexpr (std::is_same_v<T, TopR>) {
            double total = 0.0;
            const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(g.r), s.size());
            for (std::size_t i = 0; i < take; ++i) total += s[s.size() - 1 - i];
            return total;
          } else if constexpr (std::is_same_v<T, Ces>) {
            double acc = 0.0;
            for (double v : s) acc += std::pow(v, g.r);
            return std::pow(acc, 1.0 / g.r);
          } else {
            double miss = 1.0;
            for (double v : s) miss *= 1.0 - success_curve(g.curve, v);
            return 1.0 - miss;
          }
        }
      },
      v_);
}

inline std::string ValueFunction::tag() const {
  return std::visit(
      [](const auto& g) -> std::string {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Modular>) {
          return "modular";
        } else if constexpr (std::is_same_v<T, TotalProductionPower>) {
          return "power:" + format_double(g.exponent);
        } else if constexpr (std::is_same_v<T, TotalProductionSaturating>) {
          return "sat:" + format_double(g.price) + ":" + format_double(g.v0);
        } else if constexpr (std::is_same_v<T, TopR>) {
          return "topr:" + std::to_string(g.r);
        } else if constexpr (std::is_same_v<T, Ces>) {
          return "ces:" + format_double(g.r);
        } else if constexpr (std::is_same_v<T, SuccessProbability>) {
          return g.curve == SuccessCurve::kMin ? "succ:min" : "succ:exp";
        } else {
          std::string out;
          for (const auto& t : *g.terms) {
            if (!out.empty()) out += '+';
            out += format_double(t.weight) + "*" + t.fn.tag();
          }
          return out;
        }
      },
      v_);
}

inline ValueFunction ValueFunction::parse(std::string_view tag) {
  tag = trim(tag);
  if (tag.find('+') != std::string_view::npos || tag.find('*') != std::string_view::npos) {
    std::vector<WeightedTerm> terms;
    for (auto part : split(tag, '+')) {
      part = trim(part);
      const auto star = part.find('*');
      if (star == std::string_view::npos) {
        terms.push_back({1.0, parse(part)});
      } else {
        double w = 0.0;
        try {
          w = parse_double(trim(part.substr(0, star)));
        } catch (const ParseError&) {
          throw ConfigError("bad weight in value function '" + std::string(tag) + "'");
        }
        if (!(w >= 0.0)) throw ConfigError("combination weights must be >= 0");
        terms.push_back({w, parse(part.substr(star + 1))});
      }
    }
    return combination(std::move(terms));
  }
  const auto parts = split(tag, ':');
  const std::string_view name = parts[0];
  auto arity = [&](std::size_t n) {
    if (parts.size() != n + 1) throw ConfigError("value function '" + std::string(tag) + "' has wrong arity");
  };
  try {
    if (name == "modular" || name == "sum") {
      arity(0);
      return modular();
    }
    if (name == "sqrt") {
      arity(0);
      return power(0.5);
    }
    if (name == "max") {
      arity(0);
      return top_r(1);
    }
    if (name == "power") {
      arity(1);
      return power(parse_double(parts[1]));
    }
    if (name == "sat") {
      arity(2);
      return saturating(parse_double(parts[1]), parse_double(parts[2]));
    }
    if (name == "topr") {
      arity(1);
      return top_r(static_cast<int>(parse_int(parts[1])));
    }
    if (name == "ces") {
      arity(1);
      return ces(parse_double(parts[1]));
    }
    if (name == "succ") {
      arity(1);
      if (parts[1] == "min") return success(SuccessCurve::kMin);
      if (parts[1] == "exp") return success(SuccessCurve::kExp);
      throw ConfigError("unknown success curve '" + std::string(parts[1]) + "'");
    }
  } catch (const ParseError& e) {
    throw ConfigError(std::string("value function '") + std::string(tag) + "': " + e.what());
  } catch (const InvalidParameterError& e) {
    throw ConfigError(std::string("value function '") + std::string(tag) + "': " + e.what());
  }
  throw ConfigError("unknown value function '" + std::string(tag) + "'");
}

inline double evaluate(const ValueFunction& g, std::span<const double> x) { return g(x); }

/// g(x, z) - g(x), clamped at 0 against rounding.
template <class G>
double marginal(const G& g, std::span<const double> x, double z) {
  if (!(z >= 0.0)) throw DomainError("value functions are defined on nonnegative vectors");
  std::vector<double> xz(x.begin(), x.end());
  xz.push_back(z);
  return std::max(0.0, g(std::span<const double>(xz)) - g(x));
}

// ---------------------------------------------------------------------------
// Curvature

enum class CurvatureSource { kAnalytic, kSampledEstimate, kUnknown };

struct CurvatureInfo {
  std::optional<double> alpha;
  CurvatureSource source = CurvatureSource::kUnknown;

  bool analytic() const noexcept { return source == CurvatureSource::kAnalytic; }
};

/// Sampled lower bound on sup over (x subvector of y, z) of
/// 1 - (g(y,z) - g(y)) / (g(x,z) - g(x)), entries drawn from [0, bound].
template <class G>
double estimate_curvature(const G& g, std::size_t triples, RandomStream& rng, double bound = 1.0,
                          std::size_t max_len = 8) {
  double best = 0.0;
  std::vector<double> y, x;
  for (std::size_t t = 0; t < triples; ++t) {
    const std::size_t len = 1 + static_cast<std::size_t>(rng.below(max_len));
    y.clear();
    x.clear();
    for (std::size_t i = 0; i < len; ++i) {
      y.push_back(bound * rng.uniform());
      if (rng.uniform() < 0.5) x.push_back(y.back());
    }
    const double z = bound * rng.uniform();
    const double mx = marginal(g, x, z);
    if (mx <= 1e-12) continue;
    const double my = marginal(g, y, z);
    best = std::max(best, 1.0 - my / mx);
  }
  return std::clamp(best, 0.0, 1.0);
}

inline CurvatureInfo curvature_of(const ValueFunction& g, std::size_t triples = 10000, std::uint64_t seed = 0) {
  if (g.is_modular()) return {0.0, CurvatureSource::kAnalytic};
  if (g.holds<TopR>()) return {1.0, CurvatureSource::kAnalytic};
  RandomStream rng(seed, 0, Purpose::kCurvature);
  return {estimate_curvature(g, triples, rng), CurvatureSource::kSampledEstimate};
}

// ---------------------------------------------------------------------------
// Property testers

struct DrCounterexample {
  enum class Kind { kSymmetry, kDiminishingReturns };
  Kind kind;
  std::vector<double> x;
  std::vector<double> y;
  double z = 0.0;
  double lhs = 0.0;  // marginal at x (or g(y))
  double rhs = 0.0;  // marginal at y (or g(permuted y))
};

struct DrReport {
  bool pass = true;
  std::size_t trials = 0;
  std::optional<DrCounterexample> counterexample;
};

/// Samples y, a subvector x of y and z; checks g(x,z) - g(x) >= g(y,z) - g(y)
/// up to `tol`. A permutation check runs first on each y, because the
/// subvector relation is only meaningful for symmetric g.
template <class G>
DrReport check_dr_property(const G& g, std::size_t trials, RandomStream& rng, double tol = 1e-9) {
  if (trials < 1) throw InvalidParameterError("check_dr_property needs at least one trial");
  DrReport report;
  std::vector<double> y, x, perm, yz, xz;
  for (std::size_t t = 0; t < trials; ++t) {
    ++report.trials;
    const std::size_t len = 1 + static_cast<std::size_t>(rng.below(6));
    y.clear();
    x.clear();
    for (std::size_t i = 0; i < len; ++i) {
      y.push_back(rng.uniform() < 0.15 ? 0.0 : 2.0 * rng.uniform());
      if (rng.uniform() < 0.5) x.push_back(y.back());
    }
    const double z = 2.0 * rng.uniform();

    perm = y;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    const double gy = g(std::span<const double>(y));
    const double gp = g(std::span<const double>(perm));
    if (std::abs(gy - gp) > tol) {
      report.pass = false;
      report.counterexample = DrCounterexample{DrCounterexample::Kind::kSymmetry, perm, y, z, gy, gp};
      return report;
    }

    xz = x;
    xz.push_back(z);
    yz = y;
    yz.push_back(z);
    const double mx = g(std::span<const double>(xz)) - g(std::span<const double>(x));
    const double my = g(std::span<const double>(yz)) - gy;
    if (mx < my - tol) {
      report.pass = false;
      report.counterexample = DrCounterexample{DrCounterexample::Kind::kDiminishingReturns, x, y, z, mx, my};
      return report;
    }
  }
  return report;
}

/// Checks the value-ordered returns condition: for independent random x, y
/// with g(x) <= g(y), g(x, z) - g(x) >= g(y, z) - g(y). This implies the
/// extended DR property but is strictly stronger (top-r with r >= 2 fails it).
template <class G>
DrReport check_value_ordered_returns(const G& g, std::size_t trials, RandomStream& rng, double tol = 1e-9) {
  if (trials < 1) throw InvalidParameterError("check_value_ordered_returns needs at least one trial");
  DrReport report;
  std::vector<double> a, b, az, bz;
  auto draw = [&](std::vector<double>& v) {
    v.clear();
    const std::size_t len = static_cast<std::size_t>(rng.below(6));
    for (std::size_t i = 0; i < len; ++i) v.push_back(rng.uniform() < 0.15 ? 0.0 : 2.0 * rng.uniform());
  };
  for (std::size_t t = 0; t < trials; ++t) {
    ++report.trials;
    draw(a);
    draw(b);
    double ga = g(std::span<const double>(a));
    double gb = g(std::span<const double>(b));
    if (ga > gb) {
      std::swap(a, b);
      std::swap(ga, gb);
    }
    const double z = 2.0 * rng.uniform();
    az = a;
    az.push_back(z);
    bz = b;
    bz.push_back(z);
    const double ma = g(std::span<const double>(az)) - ga;
    const double mb = g(std::span<const double>(bz)) - gb;
    if (ma < mb - tol) {
      report.pass = false;
      report.counterexample = DrCounterexample{DrCounterexample::Kind::kDiminishingReturns, a, b, z, ma, mb};
      return report;
    }
  }
  return report;
}

/// Sup of g over [0, b]^k and of g1(x) = g(x, 0, ...) over [0, b]. Every
/// variant is monotone, so both are attained at the all-b corner.
struct SupNorms {
  double g_sup;
  double g1_sup;
};

inline SupNorms g_sup_norms(const ValueFunction& g, double support_bound, std::int64_t k) {
  if (!std::isfinite(support_bound)) throw UnboundedSupportError("support is unbounded; truncate it first");
  if (!(support_bound >= 0.0)) throw InvalidParameterError("support bound must be >= 0");
  if (k < 1) throw InvalidParameterError("k must be >= 1");
  const std::vector<double> corner(static_cast<std::size_t>(k), support_bound);
  const double one[1] = {support_bound};
  return {g(std::span<const double>(corner)), g(std::span<const double>(one, 1))};
}

}  // namespace tsg
